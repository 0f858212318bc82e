#include "posyn/types.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "posyn/error.hpp"

namespace posyn {

std::string_view to_string(Side s) {
    return s == Side::dominant ? "dominant" : "nondominant";
}

std::string_view to_string(Muscle m) {
    switch (m) {
        case Muscle::TA: return "TA";
        case Muscle::LG: return "LG";
        case Muscle::RF: return "RF";
        case Muscle::BF: return "BF";
        case Muscle::GM: return "GM";
        case Muscle::ABD: return "ABD";
        case Muscle::ES: return "ES";
    }
    return "?";
}

std::string_view to_string(Group g) { return g == Group::FF ? "FF" : "NoFF"; }

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::forward: return "forward";
        case Direction::backward: return "backward";
        case Direction::dominant: return "dominant";
        case Direction::nondominant: return "nondominant";
    }
    return "?";
}

std::string_view to_string(Handedness h) { return h == Handedness::right ? "right" : "left"; }

Group parse_group(std::string_view s) {
    if (s == "FF") return Group::FF;
    if (s == "NoFF" || s == "no-FF" || s == "noFF") return Group::NoFF;
    throw ValidationError("unknown group '" + std::string(s) + "'");
}

Muscle parse_muscle(std::string_view s) {
    for (Muscle m : kMuscles) {
        if (to_string(m) == s) return m;
    }
    throw ValidationError("unknown muscle '" + std::string(s) + "'");
}

Handedness parse_handedness(std::string_view s) {
    if (s == "right") return Handedness::right;
    if (s == "left") return Handedness::left;
    throw ValidationError("unknown handedness '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s, Handedness handedness) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    if (s == "dominant") return Direction::dominant;
    if (s == "nondominant") return Direction::nondominant;
    if (s == "left") {
        return handedness == Handedness::left ? Direction::dominant : Direction::nondominant;
    }
    if (s == "right") {
        return handedness == Handedness::right ? Direction::dominant : Direction::nondominant;
    }
    throw ValidationError("unknown direction '" + std::string(s) + "'");
}

int direction_index(Direction d) { return static_cast<int>(d); }

std::string MuscleChannel::label() const {
    return std::string(to_string(muscle)) + (side == Side::dominant ? "_d" : "_nd");
}

const std::array<MuscleChannel, kChannelCount>& standard_channels() {
    static const auto channels = [] {
        std::array<MuscleChannel, kChannelCount> out{};
        for (int i = 0; i < kChannelCount; ++i) {
            out[i].id = i;
            out[i].side = i < kMusclesPerSide ? Side::dominant : Side::nondominant;
            out[i].muscle = kMuscles[i % kMusclesPerSide];
        }
        return out;
    }();
    return channels;
}

namespace {

std::string trial_tag(const TrialRecording& trial) {
    std::ostringstream os;
    os << "trial " << trial.trial_id << " (subject " << trial.subject_id << ")";
    return os.str();
}

void check_increasing(const SampledSeries& s, const std::string& what, const TrialRecording& trial) {
    for (std::size_t i = 1; i < s.t.size(); ++i) {
        if (!(s.t[i] > s.t[i - 1])) {
            throw ValidationError(trial_tag(trial) + ": " + what +
                                  " timestamps not strictly increasing at sample " +
                                  std::to_string(i));
        }
    }
}

void check_coverage(const SampledSeries& s, const std::string& what, const TrialRecording& trial) {
    const double need_lo = trial.t_vr_onset - kPreOnsetCoverage;
    // One sample period of slack on either side; streams are sampled, not continuous.
    if (s.t.empty()) throw ValidationError(trial_tag(trial) + ": " + what + " stream is empty");
    const double slack = s.t.size() > 1 ? (s.t[1] - s.t[0]) : 0.0;
    if (s.t.front() > need_lo + slack + 1e-9 || s.t.back() < trial.t_end - slack - 1e-9) {
        throw ValidationError(trial_tag(trial) + ": " + what +
                              " stream does not cover [t_vr_onset - 0.2 s, t_end]");
    }
}

}  // namespace

void validate(const TrialRecording& trial) {
    const std::string tag = trial_tag(trial);
    if (trial.rate_emg <= 0.0 || trial.rate_plate <= 0.0 || trial.rate_marker <= 0.0) {
        throw ValidationError(tag + ": sampling rate missing or non-positive");
    }
    if (trial.emg.channels() != kChannelCount) {
        throw ValidationError(tag + ": expected 14 EMG channels, found " +
                              std::to_string(trial.emg.channels()));
    }
    if (trial.emg.values.cols() != trial.emg.samples()) {
        throw ValidationError(tag + ": EMG value/timestamp count mismatch");
    }
    for (int p = 0; p < kPlateCount; ++p) {
        const auto& plate = trial.plates[p];
        if (plate.channels() != kPlateRows || plate.values.cols() != plate.samples()) {
            throw ValidationError(tag + ": plate " + std::to_string(p) + " malformed");
        }
    }
    if (trial.pelvic.channels() != 2 || trial.pelvic.values.cols() != trial.pelvic.samples()) {
        throw ValidationError(tag + ": pelvic stream malformed");
    }
    if (!(trial.t_vr_onset <= trial.t_robust_onset)) {
        throw ValidationError(tag + ": t_robust_onset precedes t_vr_onset");
    }
    if (trial.t_robust_onset > trial.t_vr_onset + kMaxOnsetDelay + 1e-9) {
        throw ValidationError(tag + ": RobUST onset outside the 0-0.8 s window after VR onset");
    }
    if (!(trial.t_end > trial.t_robust_onset)) {
        throw ValidationError(tag + ": t_end precedes t_robust_onset");
    }
    if (trial.t_end - trial.t_vr_onset > kTrialWindow + kTrialWindowTolerance) {
        throw ValidationError(tag + ": trial exceeds the 3 s task window");
    }
    if (trial.outcome.score < 0 || trial.outcome.score > 10) {
        throw ValidationError(tag + ": score outside 0-10");
    }
    check_increasing(trial.emg, "EMG", trial);
    check_increasing(trial.pelvic, "pelvic", trial);
    for (int p = 0; p < kPlateCount; ++p) check_increasing(trial.plates[p], "plate", trial);
    check_coverage(trial.emg, "EMG", trial);
    check_coverage(trial.pelvic, "pelvic", trial);
    for (int p = 0; p < kPlateCount; ++p) check_coverage(trial.plates[p], "plate", trial);
}

const SubjectInfo& Cohort::subject(std::string_view id) const {
    for (const auto& s : subjects) {
        if (s.id == id) return s;
    }
    throw ValidationError("unknown subject '" + std::string(id) + "'");
}

void validate(const Cohort& cohort) {
    std::set<std::string> ids;
    for (const auto& s : cohort.subjects) {
        if (!ids.insert(s.id).second) throw ValidationError("duplicate subject '" + s.id + "'");
    }
    std::map<std::pair<std::string, int>, int> per_session;
    for (const auto& trial : cohort.trials) {
        const auto& subject = cohort.subject(trial.subject_id);
        if (subject.group != trial.group) {
            throw ValidationError(trial_tag(trial) + ": group disagrees with subject record");
        }
        validate(trial);
        ++per_session[{trial.subject_id, trial.session}];
    }
    if (cohort.trials_per_session && !cohort.allow_dropped) {
        for (const auto& [key, count] : per_session) {
            if (count != *cohort.trials_per_session) {
                throw ValidationError("subject " + key.first + " session " +
                                      std::to_string(key.second) + " has " +
                                      std::to_string(count) + " trials, expected " +
                                      std::to_string(*cohort.trials_per_session));
            }
        }
    }
}

}  // namespace posyn
