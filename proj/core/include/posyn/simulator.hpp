#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posyn/binning.hpp"
#include "posyn/geometry.hpp"
#include "posyn/types.hpp"

namespace posyn::sim {

using geometry::Vec2;

/// Planar inverted pendulum standing on a rectangular foot support. Each
/// horizontal axis is independent:
///   a = w^2 (x - cop) + coupling * F / m - (damping / m) v,  w^2 = g / h
/// with an ankle controller cop = x + (kp x + kd v) / w^2 clamped to the
/// support. kp = rate^2 and kd = 2 rate - damping / m (critically damped).
struct BodyParams {
    double mass = 70.0;               ///< kg
    double com_height = 1.0;          ///< m
    double support_ap = 0.10;         ///< half-length of the support, m
    double support_ml = 0.12;         ///< half-width of the support, m
    double stance_half_width = 0.15;  ///< plate centers at +/- this, m
    double damping = 20.0;            ///< passive damping, N s / m
    double response_rate = 3.0;       ///< closed-loop natural frequency, rad/s
    /// Share of a force at the pelvic belt that accelerates the COM; the
    /// rest is absorbed by hip flexion. Toy parameter, not physiological.
    double pelvic_coupling = 0.28;
    double gravity = 9.81;

    double body_weight() const { return mass * gravity; }
    double omega2() const { return gravity / com_height; }
    double kp() const { return response_rate * response_rate; }
    double kd() const;
    /// Support half-length along axis 0 (AP) or 1 (ML).
    double support(int axis) const { return axis == 0 ? support_ap : support_ml; }
    /// Smallest constant belt force along `axis` whose steady lean puts the
    /// COP demand on the support edge.
    double static_tipping_force(int axis) const;

    void check() const;
};

struct BodyState {
    Vec2 x = Vec2::Zero();               ///< COM offset from the support center, m
    Vec2 v = Vec2::Zero();               ///< m/s
    Vec2 support_center = Vec2::Zero();  ///< m, lab frame

    Vec2 pelvis() const { return support_center + x; }
};

struct StepOutput {
    BodyState state;
    Vec2 cop = Vec2::Zero();         ///< lab frame, m, clamped to the support
    Vec2 cop_demand = Vec2::Zero();  ///< lab frame, m, unclamped
    Vec2 accel = Vec2::Zero();
    bool stepping = false;
};

/// One semi-implicit Euler step (velocity first, passive damping implicit).
/// `force` is the belt force at the pelvis in N. A stepping event fires when
/// the COP demand leaves the support; the new support is then centered under
/// the capture point x + v / w and the velocity is kept.
StepOutput step_body(const BodyParams& body, const BodyState& state, const Vec2& force, double dt);

/// Closed-loop energy 0.5 m (|v|^2 + kp |x|^2) of the stabilized pendulum.
double closed_loop_energy(const BodyParams& body, const BodyState& state);

/// Unit vector of a perturbation direction in the body frame (x forward,
/// y toward the dominant side).
Vec2 direction_vector(Direction d);

struct BalanceBoundary {
    std::vector<Vec2> polygon;  ///< mm, counter-clockwise, convex
    Vec2 origin = Vec2::Zero(); ///< mm
};

/// Convex hull of the points together with the origin.
BalanceBoundary build_boundary(const std::vector<Vec2>& points_mm, const Vec2& origin_mm);

/// Restoring force (N) toward the origin once the pelvis leaves the
/// boundary: magnitude min(gain * d, saturation) with d the distance to the
/// boundary in meters. Zero inside or on the boundary.
Vec2 assistive_force(const BalanceBoundary& boundary, const Vec2& pelvic_mm, double gain_n_per_m,
                     double saturation_n);

/// As above plus viscous damping -damping * v (v in m/s), faded in over the
/// first `ramp_mm` outside the boundary so the force stays continuous; the
/// total is capped at the saturation.
Vec2 assistive_force(const BalanceBoundary& boundary, const Vec2& pelvic_mm, const Vec2& velocity,
                     double gain_n_per_m, double damping_n_s_per_m, double saturation_n, double ramp_mm = 5.0);

struct RigModel {
    /// Pulley positions in the lab frame, m.
    std::array<Vec2, 4> pulleys{Vec2(1.5, 0.0), Vec2(0.0, 1.5), Vec2(-1.5, 0.0), Vec2(0.0, -1.5)};
    double belt_radius = 0.15;        ///< m
    double max_cable_tension = 600.0; ///< N
    BodyParams body;
    double force_field_gain = 3000.0;       ///< N/m
    double force_field_damping = 600.0;     ///< N s/m
    double force_field_saturation = 120.0;  ///< N
    std::optional<BalanceBoundary> boundary;

    void check() const;
};

/// Nonnegative cable tensions with minimal sum of squares whose resultant is
/// `force`. Throws NumericError if the force is outside the cone spanned by
/// the cables, needs more than the tension cap, or the geometry degenerates.
std::array<double, 4> cable_tensions(const RigModel& rig, const Vec2& belt_center, const Vec2& force);

/// Resultant force of a set of tensions at `belt_center`.
Vec2 cable_resultant(const RigModel& rig, const Vec2& belt_center, const std::array<double, 4>& t);

struct CalibrationOptions {
    double start_fraction = 0.40;
    double step_fraction = 0.01;
    double cap_fraction = 1.00;
    double pulse_duration = 0.150;  ///< s
    double dt = 0.0005;             ///< s
    double settle = 3.0;            ///< s simulated after the pulse
};

struct CalibrationResult {
    double force_n = 0.0;
    double fraction = 0.0;  ///< of body weight
    bool never_fell = false;
    bool fell_at_start = false;
    int pulses = 0;
};

/// True if a rectangular pulse of `force` from quiet stance ends in a step.
bool pulse_causes_step(const BodyParams& body, const Vec2& force, double duration, double dt,
                       double settle);

/// Pulses from start_fraction of body weight upward in step_fraction
/// increments until the body steps; returns the last maintained force.
CalibrationResult calibrate_threshold(const RigModel& rig, Direction direction,
                                      const CalibrationOptions& options = {});

/// 10 - floor(10 r / R) clamped to [0, 10].
int vr_score(double hit_radius_fraction);

/// Synergy-driven EMG generator. Bin values are W * C; each bin becomes a
/// raised-cosine bump inside its window, so the bin mean of the envelope is
/// the prescribed value. The envelope modulates a band-limited carrier.
struct EmgModel {
    Eigen::MatrixXd W;      ///< 14 x n
    Eigen::MatrixXd C_apr;  ///< n x 16, columns phase_columns(APR, true)
    /// n x 8: VPR1 then VPR2 for each direction. VPR2 scales a bump at the
    /// catch; VPR3 follows from the bump's decay and is not set directly.
    Eigen::MatrixXd C_vpr;
    Eigen::VectorXd gains = Eigen::VectorXd::Ones(kChannelCount);  ///< mV per unit
    /// Fixed multiplicative factors per channel and cell (14 x 24, APR cells
    /// then VPR cells); empty means all ones.
    Eigen::MatrixXd cell_factors;
    double trial_noise = 0.0;  ///< sd of per-trial multiplicative jitter
    double carrier_low = 30.0;
    double carrier_high = 250.0;
    double noise_floor = 0.002;  ///< additive sensor noise, mV rms
    double bump_width = 0.045;   ///< s
};

/// Raw 14-channel EMG on t = 0, 1/rate, ... , t_end.
SampledSeries synthesize_emg(const EmgModel& model, Direction direction, double t_onset, double t_catch,
                             double t_end, double rate, std::uint64_t seed);

struct TaskParams {
    double t_vr_onset = 0.2;          ///< s after recording start
    double ball_distance = 0.45;      ///< m at launch
    double ball_speed = 0.30;         ///< m/s
    double uncertainty_radius = 0.10; ///< m
    double target_distance = 5.0;     ///< m
    double target_radius = 0.5;       ///< m
    double throw_delay = 0.6;         ///< s from catch to release
    double reach_gain = 0.03;         ///< body weights of reach reaction
    double sway_noise = 0.004;        ///< body weights, rms
    double sway_time_constant = 0.3;  ///< s
    double catch_speed_limit = 0.15;  ///< m/s pelvic speed
    double throw_speed_ref = 0.20;    ///< m/s pelvic speed giving r = R
    double aim_error = 0.15;          ///< rms of r/R at rest
    double dt = 0.001;
    double rate_emg = 2000.0;
    double rate_plate = 1000.0;
    double rate_marker = 100.0;

    double t_catch() const { return t_vr_onset + ball_distance / ball_speed; }
    double t_end() const { return t_vr_onset + kTrialWindow; }
};

struct TrialScript {
    Direction direction = Direction::forward;
    double perturbation_force = 0.0;      ///< N
    double t_perturb_onset = 0.0;         ///< s after VR onset, in [0, 0.8]
    double perturbation_duration = 0.150; ///< s
    bool ff_enabled = false;
    std::uint64_t seed = 1;
};

struct TrialDiagnostics {
    double max_pelvic_excursion_mm = 0.0;
    double ff_active_time = 0.0;  ///< s
    bool stepped = false;
    Vec2 ball_offset = Vec2::Zero();  ///< m
    double cable_scale_min = 1.0;     ///< < 1 when the tension cap limited the belt force
};

struct SimulatedTrial {
    TrialRecording recording;
    TrialDiagnostics diagnostics;
};

/// Simulates one 3 s catch-and-throw trial. EMG comes from `emg` when given,
/// otherwise the channels carry only the sensor noise floor.
SimulatedTrial run_trial(const RigModel& rig, const TaskParams& task, const TrialScript& script,
                         const EmgModel* emg = nullptr);

/// Pelvic points of unperturbed trials, used to build a balance boundary.
std::vector<Vec2> quiet_pelvic_points(const RigModel& rig, const TaskParams& task, int trials,
                                      std::uint64_t seed);

/// Disjoint-support ground truth: muscles dealt round-robin to the n
/// synergies, cells shared out so every synergy carries similar energy.
/// Active entries lie in [0.95, 1], the rest in [0, 0.01).
struct GroundTruth {
    Eigen::MatrixXd W;
    Eigen::MatrixXd C;
};
GroundTruth make_ground_truth(int n, Index muscles, Index columns, std::uint64_t seed);

struct GroupSpec {
    Group group = Group::FF;
    int subjects = 5;
    int n_syn = 4;
    bool ff_enabled = true;
};

struct CohortSpec {
    std::vector<GroupSpec> groups{{Group::FF, 5, 4, true}, {Group::NoFF, 5, 8, false}};
    int sessions = 2;
    int trials_per_session = 50;
    double noise = 0.05;
    std::uint64_t seed = 1;
    double mass_min = 55.0, mass_max = 85.0;
    double height_min = 0.90, height_max = 1.05;
    int quiet_trials = 10;
    /// Per-trial EMG synthesis; off leaves only the noise floor in the EMG.
    bool synthesize = true;
    RigModel rig;
    TaskParams task;
    CalibrationOptions calibration;
};

struct GroupTruth {
    Group group = Group::FF;
    int n_syn = 0;
    Eigen::MatrixXd W;
    Eigen::MatrixXd C_apr;
    Eigen::MatrixXd C_vpr;
};

struct SyntheticCohort {
    Cohort cohort;
    std::vector<GroupTruth> truth;
    std::vector<TrialDiagnostics> diagnostics;  ///< parallel to cohort.trials
};

SyntheticCohort generate_synthetic_cohort(const CohortSpec& spec);

/// Ground truth as JSON text (W, C_apr, C_vpr per group with column labels).
std::string ground_truth_json(const SyntheticCohort& cohort);

/// Scenario files hold a CohortSpec; absent keys keep their defaults.
CohortSpec parse_scenario(const std::string& json_text);
CohortSpec load_scenario(const std::filesystem::path& path);
std::string scenario_json(const CohortSpec& spec);

}  // namespace posyn::sim
