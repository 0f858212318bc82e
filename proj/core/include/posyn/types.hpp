#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace posyn {

using Index = Eigen::Index;

inline constexpr int kChannelCount = 14;
inline constexpr int kMusclesPerSide = 7;
inline constexpr int kDirectionCount = 4;

// Trial timing bounds relative to VR onset (seconds).
inline constexpr double kMaxOnsetDelay = 0.8;
inline constexpr double kTrialWindow = 3.0;
inline constexpr double kTrialWindowTolerance = 0.01;
inline constexpr double kPreOnsetCoverage = 0.2;

enum class Side { dominant, nondominant };
enum class Muscle { TA, LG, RF, BF, GM, ABD, ES };
enum class Group { FF, NoFF };
enum class Direction { forward, backward, dominant, nondominant };
enum class Handedness { right, left };

inline constexpr std::array<Direction, kDirectionCount> kDirections{
    Direction::forward, Direction::backward, Direction::dominant, Direction::nondominant};
inline constexpr std::array<Muscle, kMusclesPerSide> kMuscles{
    Muscle::TA, Muscle::LG, Muscle::RF, Muscle::BF, Muscle::GM, Muscle::ABD, Muscle::ES};

std::string_view to_string(Side s);
std::string_view to_string(Muscle m);
std::string_view to_string(Group g);
std::string_view to_string(Direction d);
std::string_view to_string(Handedness h);

Group parse_group(std::string_view s);
Muscle parse_muscle(std::string_view s);
Handedness parse_handedness(std::string_view s);

/// Parses a perturbation label. Accepts the canonical labels plus "left" and
/// "right", which are remapped through the subject's handedness (the hand
/// side is the dominant side).
Direction parse_direction(std::string_view s, Handedness handedness = Handedness::right);

int direction_index(Direction d);

struct MuscleChannel {
    int id = 0;
    Side side = Side::dominant;
    Muscle muscle = Muscle::TA;

    std::string label() const;
    friend bool operator==(const MuscleChannel&, const MuscleChannel&) = default;
};

/// Channel layout used throughout: ids 0-6 are the dominant side in
/// TA, LG, RF, BF, GM, ABD, ES order; ids 7-13 the nondominant side.
const std::array<MuscleChannel, kChannelCount>& standard_channels();

/// Timestamped multichannel samples, channels x samples.
struct SampledSeries {
    std::vector<double> t;
    Eigen::MatrixXd values;

    Index channels() const { return values.rows(); }
    Index samples() const { return static_cast<Index>(t.size()); }
    bool empty() const { return t.empty(); }
};

/// Uniformly sampled multichannel stream, channels x samples.
struct UniformSeries {
    double t0 = 0.0;
    double rate = 0.0;
    Eigen::MatrixXd values;

    Index channels() const { return values.rows(); }
    Index samples() const { return values.cols(); }
    double time(Index i) const { return t0 + static_cast<double>(i) / rate; }
    double t_last() const { return time(samples() - 1); }
};

struct Outcome {
    bool caught = false;
    bool thrown = false;
    int score = 0;

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

inline constexpr int kPlateCount = 2;
/// Rows of a plate stream: fx, fy, fz (N), mx, my, mz (N m).
inline constexpr int kPlateRows = 6;

struct TrialRecording {
    int trial_id = 0;
    std::string subject_id;
    Group group = Group::NoFF;
    int session = 1;
    Direction direction = Direction::forward;
    /// Failed or dropped trials stay in the cohort with valid = false.
    bool valid = true;

    double rate_emg = 0.0;
    double rate_plate = 0.0;
    double rate_marker = 0.0;

    SampledSeries emg;                                ///< 14 x N, mV
    std::array<SampledSeries, kPlateCount> plates;    ///< 6 x N each
    SampledSeries pelvic;                             ///< 2 x N, mm

    double t_vr_onset = 0.0;
    double t_robust_onset = 0.0;
    double t_end = 0.0;
    Outcome outcome;
};

/// Checks every TrialRecording invariant; throws ValidationError naming the
/// trial and the violated rule.
void validate(const TrialRecording& trial);

struct SubjectInfo {
    std::string id;
    Group group = Group::NoFF;
    Handedness handedness = Handedness::right;
    double body_weight_n = 0.0;
    std::map<Direction, double> thresholds_n;
};

struct Cohort {
    std::vector<SubjectInfo> subjects;
    std::vector<TrialRecording> trials;
    /// When set, every (subject, session) must hold exactly this many trial
    /// entries unless allow_dropped is true.
    std::optional<int> trials_per_session;
    bool allow_dropped = false;

    const SubjectInfo& subject(std::string_view id) const;
};

void validate(const Cohort& cohort);

}  // namespace posyn
