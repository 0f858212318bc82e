#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "posyn/types.hpp"

namespace posyn::binning {

inline constexpr double kBinWidth = 0.075;
inline constexpr double kVprSearchStart = 0.400;
inline constexpr double kOffsetFraction = 0.05;

enum class Bin { BK, APR1, APR2, APR3, VPR1, VPR2, VPR3 };
inline constexpr int kBinCount = 7;
inline constexpr std::array<Bin, kBinCount> kBins{Bin::BK,   Bin::APR1, Bin::APR2, Bin::APR3,
                                                  Bin::VPR1, Bin::VPR2, Bin::VPR3};

enum class Phase { APR, VPR };

std::string_view to_string(Bin b);
std::string_view to_string(Phase p);
Bin parse_bin(std::string_view s);
Phase parse_phase(std::string_view s);

/// Half-open time window [start, end) in seconds.
struct Window {
    double start = 0.0;
    double end = 0.0;
    bool clipped = false;

    double width() const { return end - start; }
    double center() const { return 0.5 * (start + end); }
};

/// Fixed windows relative to RobUST onset: BK, APR1-3, VPR1.
Window fixed_window(Bin bin, double t_onset);

struct VprWindows {
    Window vpr2;
    Window vpr3;
    double peak_time = 0.0;
    double peak_value = 0.0;
    double offset_time = 0.0;
    /// No offset crossing before t_end; VPR3 was shifted to end at t_end.
    bool vpr3_clamped = false;
    /// Envelope identically zero over the search window.
    bool valid = true;
};

/// Locates VPR2 (centered on the envelope peak after onset + 0.4 s) and VPR3
/// (centered on the first post-peak fall below 5% of the peak) for one
/// channel. Windows are clipped to [envelope start, t_end].
VprWindows find_vpr_windows(std::span<const double> envelope, double t0, double rate,
                            double t_onset, double t_end);

/// Mean of samples whose timestamps lie in [window.start, window.end).
double bin_average(std::span<const double> envelope, double t0, double rate, const Window& window);

/// Per-channel bin means of one trial: 14 x 7 (columns in kBins order), plus
/// flags for channels whose VPR windows could not be placed.
struct TrialBins {
    Eigen::MatrixXd means;
    std::vector<bool> vpr_valid;
    std::vector<bool> vpr3_clamped;
};

TrialBins bin_trial(const UniformSeries& envelopes, double t_onset, double t_end);

/// Divides each row by its maximum. Throws ValidationError naming the first
/// channel whose values are all zero.
Eigen::MatrixXd normalize_per_muscle(const Eigen::MatrixXd& values);

struct ColumnLabel {
    Bin bin = Bin::BK;
    Direction direction = Direction::forward;

    friend bool operator==(const ColumnLabel&, const ColumnLabel&) = default;
};

/// Bins used by a phase, in column order.
std::vector<Bin> phase_bins(Phase phase, bool include_bk);

/// Column labels for a phase: bins-major, directions-minor.
std::vector<ColumnLabel> phase_columns(Phase phase, bool include_bk);

struct BinnedActivationMatrix {
    Eigen::MatrixXd values;                  ///< 14 x columns, in [0, 1]
    std::vector<MuscleChannel> rows;
    std::vector<ColumnLabel> columns;
    std::vector<int> trials_per_cell;        ///< per column
    Phase phase = Phase::APR;
};

/// Binned, normalized activations of one trial.
struct NormalizedTrial {
    Direction direction = Direction::forward;
    Eigen::MatrixXd values;  ///< 14 x 7
};

enum class NormalizationScope { subject, session };

/// Bins a set of trials from one subject and normalizes each muscle by its
/// maximum over all bins, directions and trials. With scope = session the
/// maximum is taken per session.
std::vector<NormalizedTrial> normalize_trials(const std::vector<TrialBins>& bins,
                                              const std::vector<Direction>& directions,
                                              const std::vector<int>& sessions,
                                              NormalizationScope scope);

/// Averages normalized trials into the (bin x direction) matrix of one phase,
/// then rescales each row so its maximum is exactly 1.
BinnedActivationMatrix assemble_matrix(const std::vector<NormalizedTrial>& trials, Phase phase,
                                       bool include_bk = true);

}  // namespace posyn::binning
