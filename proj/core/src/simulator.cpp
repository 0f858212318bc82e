#include "posyn/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "posyn/dsp.hpp"
#include "posyn/error.hpp"
#include "posyn/io.hpp"
#include "posyn/rng.hpp"

namespace posyn::sim {

using nlohmann::json;

double BodyParams::kd() const { return std::max(0.0, 2.0 * response_rate - damping / mass); }

double BodyParams::static_tipping_force(int axis) const {
    return support(axis) * mass / (pelvic_coupling * (1.0 / kp() + 1.0 / omega2()));
}

void BodyParams::check() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string("body: ") + name + " must be positive");
        }
    };
    positive(mass, "mass");
    positive(com_height, "com_height");
    positive(support_ap, "support_ap");
    positive(support_ml, "support_ml");
    positive(stance_half_width, "stance_half_width");
    positive(response_rate, "response_rate");
    positive(pelvic_coupling, "pelvic_coupling");
    positive(gravity, "gravity");
    if (damping < 0.0) throw ValidationError("body: damping must be >= 0");
    if (pelvic_coupling > 1.0) throw ValidationError("body: pelvic_coupling must be <= 1");
}

StepOutput step_body(const BodyParams& body, const BodyState& state, const Vec2& force, double dt) {
    if (!(dt > 0.0) || dt > 0.002 + 1e-15) throw ValidationError("step_body: dt must be in (0, 2 ms]");
    const double w2 = body.omega2();
    const double kp = body.kp();
    const double kd = body.kd();
    const double beta = body.damping / body.mass;

    StepOutput out;
    out.state = state;
    for (int k = 0; k < 2; ++k) {
        const double x = state.x(k);
        const double v = state.v(k);
        const double demand = x + (kp * x + kd * v) / w2;
        const double limit = body.support(k);
        if (std::abs(demand) > limit) out.stepping = true;
        const double c = std::clamp(demand, -limit, limit);
        const double a = w2 * (x - c) + body.pelvic_coupling * force(k) / body.mass;
        const double v_next = (v + dt * a) / (1.0 + dt * beta);
        out.state.v(k) = v_next;
        out.state.x(k) = x + dt * v_next;
        out.accel(k) = (v_next - v) / dt;
        out.cop(k) = state.support_center(k) + c;
        out.cop_demand(k) = state.support_center(k) + demand;
    }
    if (!out.state.x.allFinite() || !out.state.v.allFinite()) {
        throw NumericError("step_body: state became non-finite");
    }
    if (out.stepping) {
        // New support under the capture point; the body keeps its momentum.
        const Vec2 shift = out.state.x + out.state.v / std::sqrt(w2);
        out.state.support_center += shift;
        out.state.x -= shift;
    }
    return out;
}

double closed_loop_energy(const BodyParams& body, const BodyState& state) {
    return 0.5 * body.mass * (state.v.squaredNorm() + body.kp() * state.x.squaredNorm());
}

Vec2 direction_vector(Direction d) {
    switch (d) {
        case Direction::forward: return {1.0, 0.0};
        case Direction::backward: return {-1.0, 0.0};
        case Direction::dominant: return {0.0, 1.0};
        case Direction::nondominant: return {0.0, -1.0};
    }
    return Vec2::Zero();
}

BalanceBoundary build_boundary(const std::vector<Vec2>& points_mm, const Vec2& origin_mm) {
    if (points_mm.size() < 3) throw NumericError("build_boundary: need at least 3 points");
    std::vector<Vec2> all = points_mm;
    all.push_back(origin_mm);
    BalanceBoundary b;
    b.polygon = geometry::convex_hull(std::move(all));
    b.origin = origin_mm;
    return b;
}

Vec2 assistive_force(const BalanceBoundary& boundary, const Vec2& pelvic_mm, double gain_n_per_m,
                     double saturation_n) {
    if (boundary.polygon.size() < 3) throw ValidationError("assistive_force: boundary has no area");
    if (geometry::contains(boundary.polygon, pelvic_mm)) return Vec2::Zero();
    const Vec2 toward = boundary.origin - pelvic_mm;
    const double len = toward.norm();
    if (!(len > 0.0)) throw NumericError("assistive_force: pelvis at the origin yet outside the boundary");
    const double d_m = geometry::distance_to_boundary(boundary.polygon, pelvic_mm) / 1000.0;
    const double magnitude = std::min(gain_n_per_m * d_m, saturation_n);
    return toward / len * magnitude;
}

Vec2 assistive_force(const BalanceBoundary& boundary, const Vec2& pelvic_mm, const Vec2& velocity,
                     double gain_n_per_m, double damping_n_s_per_m, double saturation_n, double ramp_mm) {
    Vec2 f = assistive_force(boundary, pelvic_mm, gain_n_per_m, saturation_n);
    if (f.squaredNorm() == 0.0 || damping_n_s_per_m == 0.0) return f;
    const double d = geometry::distance_to_boundary(boundary.polygon, pelvic_mm);
    const double fade = ramp_mm > 0.0 ? std::min(1.0, d / ramp_mm) : 1.0;
    f -= damping_n_s_per_m * fade * velocity;
    const double n = f.norm();
    if (n > saturation_n) f *= saturation_n / n;
    return f;
}

namespace {

std::array<Vec2, 4> cable_units(const RigModel& rig, const Vec2& center) {
    std::array<Vec2, 4> u;
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec2 d = rig.pulleys[i] - center;
        const double len = d.norm();
        if (!(len > rig.belt_radius)) {
            throw NumericError("cable_tensions: belt reaches pulley " + std::to_string(i));
        }
        u[i] = d / len;
    }
    return u;
}

// Minimum-norm nonnegative tensions without the cap. Every optimum has some
// support S on which it is the minimum-norm solution of U_S t = f, so the
// best nonnegative exact candidate over all 15 supports is the optimum.
std::array<double, 4> min_norm_tensions(const std::array<Vec2, 4>& u, const Vec2& f) {
    std::array<double, 4> best{0, 0, 0, 0};
    if (f.squaredNorm() == 0.0) return best;
    const double scale = std::max(1.0, f.norm());
    double best_norm = std::numeric_limits<double>::infinity();
    std::array<int, 15> masks{};
    for (int m = 1; m < 16; ++m) masks[static_cast<std::size_t>(m - 1)] = m;
    std::stable_sort(masks.begin(), masks.end(),
                     [](int a, int b) { return std::popcount(unsigned(a)) < std::popcount(unsigned(b)); });

    for (int mask : masks) {
        std::vector<int> idx;
        for (int i = 0; i < 4; ++i) {
            if (mask & (1 << i)) idx.push_back(i);
        }
        const auto k = static_cast<Index>(idx.size());
        Eigen::Matrix<double, 2, Eigen::Dynamic> U(2, k);
        for (Index j = 0; j < k; ++j) U.col(j) = u[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];

        Eigen::VectorXd t(k);
        if (k == 1) {
            t(0) = U.col(0).dot(f);
        } else if (k == 2 && std::abs(U.determinant()) > 1e-12) {
            t = Eigen::Matrix2d(U).inverse() * f;
        } else {
            const Eigen::Matrix2d G = U * U.transpose();
            if (std::abs(G.determinant()) > 1e-12) {
                t = U.transpose() * (G.inverse() * f);
            } else {
                t = U.completeOrthogonalDecomposition().solve(f);
            }
        }
        if ((t.array() < -1e-12 * scale).any()) continue;
        t = t.cwiseMax(0.0);
        if ((U * t - f).norm() > 1e-9 * scale) continue;
        const double norm = t.squaredNorm();
        if (norm < best_norm * (1.0 - 1e-12)) {
            best_norm = norm;
            best = {0, 0, 0, 0};
            for (Index j = 0; j < k; ++j) best[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = t(j);
        }
    }
    if (!std::isfinite(best_norm)) {
        throw NumericError("cable_tensions: force is outside the cone spanned by the cables");
    }
    return best;
}

}  // namespace

void RigModel::check() const {
    body.check();
    if (!(max_cable_tension > 0.0)) throw ValidationError("rig: max_cable_tension must be positive");
    if (belt_radius < 0.0) throw ValidationError("rig: belt_radius must be >= 0");
    if (force_field_gain < 0.0 || force_field_damping < 0.0 || force_field_saturation < 0.0) {
        throw ValidationError("rig: force field gain, damping and saturation must be >= 0");
    }
    const auto u = cable_units(*this, Vec2::Zero());
    std::vector<Vec2> tips(u.begin(), u.end());
    std::vector<Vec2> hull;
    try {
        hull = geometry::convex_hull(tips);
    } catch (const NumericError&) {
        throw NumericError("rig: cable directions are collinear");
    }
    // The cables span every planar direction iff the origin lies strictly
    // inside the hull of their unit vectors.
    if (!geometry::contains(hull, Vec2::Zero(), 0.0) || geometry::distance_to_boundary(hull, Vec2::Zero()) < 1e-6) {
        throw NumericError("rig: cables do not positively span the plane");
    }
}

std::array<double, 4> cable_tensions(const RigModel& rig, const Vec2& belt_center, const Vec2& force) {
    const auto t = min_norm_tensions(cable_units(rig, belt_center), force);
    const double peak = *std::max_element(t.begin(), t.end());
    if (peak > rig.max_cable_tension) {
        throw NumericError("cable_tensions: requested force needs " + std::to_string(peak) +
                           " N, above the tension cap");
    }
    return t;
}

Vec2 cable_resultant(const RigModel& rig, const Vec2& belt_center, const std::array<double, 4>& t) {
    const auto u = cable_units(rig, belt_center);
    Vec2 f = Vec2::Zero();
    for (std::size_t i = 0; i < 4; ++i) f += t[i] * u[i];
    return f;
}

bool pulse_causes_step(const BodyParams& body, const Vec2& force, double duration, double dt,
                       double settle) {
    const auto pulse_steps = static_cast<long>(std::llround(duration / dt));
    const auto total = pulse_steps + static_cast<long>(std::llround(settle / dt));
    BodyState s;
    for (long k = 0; k < total; ++k) {
        const auto out = step_body(body, s, k < pulse_steps ? force : Vec2::Zero(), dt);
        if (out.stepping) return true;
        s = out.state;
    }
    return false;
}

CalibrationResult calibrate_threshold(const RigModel& rig, Direction direction,
                                      const CalibrationOptions& options) {
    rig.body.check();
    if (!(options.step_fraction > 0.0) || !(options.start_fraction > 0.0) ||
        options.cap_fraction < options.start_fraction) {
        throw ValidationError("calibrate_threshold: invalid start/step/cap fractions");
    }
    if (pulse_causes_step(rig.body, Vec2::Zero(), 0.0, options.dt, 1.0)) {
        throw NumericError("calibrate_threshold: body is not stable at rest");
    }
    const double bw = rig.body.body_weight();
    const Vec2 unit = direction_vector(direction);
    CalibrationResult r;
    double last_held = -1.0;
    for (int k = 0;; ++k) {
        const double frac = options.start_fraction + k * options.step_fraction;
        if (frac > options.cap_fraction + 1e-9) break;
        ++r.pulses;
        if (pulse_causes_step(rig.body, unit * (frac * bw), options.pulse_duration, options.dt, options.settle)) {
            if (k == 0) {
                r.fell_at_start = true;
                r.fraction = options.start_fraction;
                r.force_n = r.fraction * bw;
                return r;
            }
            r.fraction = last_held;
            r.force_n = last_held * bw;
            return r;
        }
        last_held = frac;
    }
    r.never_fell = true;
    r.fraction = options.cap_fraction;
    r.force_n = r.fraction * bw;
    return r;
}

int vr_score(double hit_radius_fraction) {
    if (hit_radius_fraction < 0.0 || std::isnan(hit_radius_fraction)) {
        throw ValidationError("vr_score: negative hit radius");
    }
    if (hit_radius_fraction >= 1.0) return 0;
    const int s = 10 - static_cast<int>(std::floor(10.0 * hit_radius_fraction));
    return std::clamp(s, 0, 10);
}

namespace {

double raised_cosine(double t, double center, double width) {
    const double u = (t - center) / width;
    if (std::abs(u) >= 0.5) return 0.0;
    return 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * u));
}

}  // namespace

SampledSeries synthesize_emg(const EmgModel& model, Direction direction, double t_onset, double t_catch,
                             double t_end, double rate, std::uint64_t seed) {
    const Index n = model.W.cols();
    if (model.W.rows() != kChannelCount || model.C_apr.rows() != n || model.C_apr.cols() != 16 ||
        model.C_vpr.rows() != n || model.C_vpr.cols() != 8) {
        throw ValidationError("synthesize_emg: W must be 14 x n, C_apr n x 16 and C_vpr n x 8");
    }
    if (model.bump_width <= 0.0 || model.bump_width > binning::kBinWidth) {
        throw ValidationError("synthesize_emg: bump width must fit inside a bin");
    }
    const bool has_factors = model.cell_factors.size() > 0;
    if (has_factors && (model.cell_factors.rows() != kChannelCount || model.cell_factors.cols() != 24)) {
        throw ValidationError("synthesize_emg: cell_factors must be 14 x 24");
    }

    const Index samples = static_cast<Index>(std::floor(t_end * rate + 1e-9)) + 1;
    SampledSeries out;
    out.t.resize(static_cast<std::size_t>(samples));
    for (Index i = 0; i < samples; ++i) out.t[static_cast<std::size_t>(i)] = static_cast<double>(i) / rate;
    out.values.resize(kChannelCount, samples);

    const int d = direction_index(direction);
    const Eigen::MatrixXd apr = model.W * model.C_apr;
    const Eigen::MatrixXd vpr = model.W * model.C_vpr;

    // Bump centers for BK, APR1-3, VPR1 (fixed windows) and the catch peak.
    std::array<double, 6> centers{};
    for (int b = 0; b < 5; ++b) centers[static_cast<std::size_t>(b)] = binning::fixed_window(binning::kBins[b], t_onset).center();
    centers[5] = t_catch;
    // A raised cosine of width w averages to w / (2 * bin width) over a bin.
    const double peak_gain = 2.0 * binning::kBinWidth / model.bump_width;

    Rng rng(seed);
    const auto carrier = dsp::butter_bandpass(4, model.carrier_low, model.carrier_high, rate);
    std::vector<double> noise(static_cast<std::size_t>(samples));
    for (Index c = 0; c < kChannelCount; ++c) {
        std::array<double, 6> amp{};
        for (int b = 0; b < 6; ++b) {
            const int cell = b < 4 ? b * kDirectionCount + d : 16 + (b - 4) * kDirectionCount + d;
            double value = b < 4 ? apr(c, b * kDirectionCount + d) : vpr(c, (b - 4) * kDirectionCount + d);
            if (has_factors) value *= model.cell_factors(c, cell);
            const double jitter = std::max(0.0, 1.0 + model.trial_noise * rng.normal());
            amp[static_cast<std::size_t>(b)] = model.gains(c) * value * jitter * peak_gain;
        }
        for (auto& v : noise) v = rng.normal();
        auto band = carrier.apply(noise);
        double ss = 0.0;
        for (double v : band) ss += v * v;
        const double rms = std::sqrt(ss / static_cast<double>(band.size()));
        for (Index i = 0; i < samples; ++i) {
            const double t = out.t[static_cast<std::size_t>(i)];
            double env = 0.0;
            for (std::size_t b = 0; b < 6; ++b) {
                if (amp[b] != 0.0) env += amp[b] * raised_cosine(t, centers[b], model.bump_width);
            }
            out.values(c, i) = env * band[static_cast<std::size_t>(i)] / rms + model.noise_floor * rng.normal();
        }
    }
    return out;
}

namespace {

double smooth_window(double t, double start, double end) {
    if (t <= start || t >= end) return 0.0;
    return raised_cosine(t, 0.5 * (start + end), end - start);
}

long ratio_steps(double rate, double dt, const char* name) {
    const double r = 1.0 / (rate * dt);
    const long k = std::lround(r);
    if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-6) {
        throw ValidationError(std::string("run_trial: ") + name + " rate must divide the simulation rate");
    }
    return k;
}

}  // namespace

SimulatedTrial run_trial(const RigModel& rig, const TaskParams& task, const TrialScript& script,
                         const EmgModel* emg) {
    rig.body.check();
    if (script.t_perturb_onset < 0.0 || script.t_perturb_onset > kMaxOnsetDelay + 1e-12) {
        throw ValidationError("run_trial: perturbation onset must lie in [0, 0.8] s");
    }
    if (script.perturbation_force < 0.0 || script.perturbation_duration < 0.0) {
        throw ValidationError("run_trial: perturbation force and duration must be >= 0");
    }
    if (script.ff_enabled && !rig.boundary) {
        throw ValidationError("run_trial: force field enabled without a balance boundary");
    }
    if (task.t_vr_onset < kPreOnsetCoverage) {
        throw ValidationError("run_trial: VR onset must leave 0.2 s of pre-onset recording");
    }
    const double dt = task.dt;
    const long plate_every = ratio_steps(task.rate_plate, dt, "plate");
    const long marker_every = ratio_steps(task.rate_marker, dt, "marker");

    const BodyParams& body = rig.body;
    const double bw = body.body_weight();
    const double t_vr = task.t_vr_onset;
    const double t_on = t_vr + script.t_perturb_onset;
    const double t_off = t_on + script.perturbation_duration;
    const double t_catch = task.t_catch();
    const double t_throw = t_catch + task.throw_delay;
    const double t_end = task.t_end();
    const long steps = std::lround(t_end / dt);

    Rng offset_rng(derive_seed(script.seed, 1));
    Rng sway_rng(derive_seed(script.seed, 2));
    Rng aim_rng(derive_seed(script.seed, 3));

    SimulatedTrial result;
    auto& diag = result.diagnostics;
    {
        const double r = task.uncertainty_radius * std::sqrt(offset_rng.uniform());
        const double th = 2.0 * std::numbers::pi * offset_rng.uniform();
        diag.ball_offset = Vec2(r * std::cos(th), r * std::sin(th));
    }
    const Vec2 reach_dir(0.5, task.uncertainty_radius > 0.0 ? diag.ball_offset.y() / task.uncertainty_radius : 0.0);
    const Vec2 pert = direction_vector(script.direction) * script.perturbation_force;

    auto& rec = result.recording;
    rec.direction = script.direction;
    rec.rate_emg = task.rate_emg;
    rec.rate_plate = task.rate_plate;
    rec.rate_marker = task.rate_marker;
    rec.t_vr_onset = t_vr;
    rec.t_robust_onset = t_on;
    rec.t_end = t_end;

    const long plate_samples = steps / plate_every + 1;
    const long marker_samples = steps / marker_every + 1;
    for (auto& p : rec.plates) {
        p.t.resize(static_cast<std::size_t>(plate_samples));
        p.values.resize(kPlateRows, plate_samples);
    }
    rec.pelvic.t.resize(static_cast<std::size_t>(marker_samples));
    rec.pelvic.values.resize(2, marker_samples);

    BodyState state;
    Vec2 sway = Vec2::Zero();
    const double sway_sd = task.sway_noise * bw;
    const double sway_decay = dt / task.sway_time_constant;
    const double sway_kick = sway_sd * std::sqrt(2.0 * sway_decay);
    bool stepped_before_catch = false;
    bool stepped_before_throw = false;
    double speed_catch = 0.0;
    double speed_throw = 0.0;
    const long catch_step = std::lround(t_catch / dt);
    const long throw_step = std::lround(t_throw / dt);

    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vec2 pelvis_mm = state.pelvis() * 1000.0;
        diag.max_pelvic_excursion_mm = std::max(diag.max_pelvic_excursion_mm, pelvis_mm.norm());
        if (k == catch_step) speed_catch = state.v.norm();
        if (k == throw_step) speed_throw = state.v.norm();

        Vec2 belt = Vec2::Zero();
        if (t >= t_on && t < t_off) belt += pert;
        if (script.ff_enabled) {
            const Vec2 assist = assistive_force(*rig.boundary, pelvis_mm, state.v, rig.force_field_gain,
                                                rig.force_field_damping, rig.force_field_saturation);
            if (assist.squaredNorm() > 0.0) diag.ff_active_time += dt;
            belt += assist;
        }
        if (belt.squaredNorm() > 0.0) {
            const auto tension = min_norm_tensions(cable_units(rig, state.pelvis()), belt);
            const double peak = *std::max_element(tension.begin(), tension.end());
            if (peak > rig.max_cable_tension) {
                const double s = rig.max_cable_tension / peak;
                diag.cable_scale_min = std::min(diag.cable_scale_min, s);
                belt *= s;
            }
        }

        Vec2 internal = sway;
        internal += reach_dir * (task.reach_gain * bw * smooth_window(t, t_catch - 0.5, t_catch + 0.1));
        internal += Vec2(-1.0, 0.0) * (task.reach_gain * bw * smooth_window(t, t_throw, t_throw + 0.3));

        const auto out = step_body(body, state, belt + internal, dt);

        if (k % plate_every == 0) {
            const Index i = k / plate_every;
            const double w = body.stance_half_width;
            const double share = std::clamp((out.cop.y() + w) / (2.0 * w), 0.0, 1.0);
            const Vec2 shear = body.mass * out.accel - body.pelvic_coupling * (belt + internal);
            const std::array<double, 2> shares{share, 1.0 - share};
            const std::array<double, 2> plate_y{w, -w};
            for (std::size_t p = 0; p < 2; ++p) {
                const double fz = shares[p] * bw;
                auto& series = rec.plates[p];
                series.t[static_cast<std::size_t>(i)] = static_cast<double>(i) / task.rate_plate;
                series.values(0, i) = shares[p] * shear.x();
                series.values(1, i) = shares[p] * shear.y();
                series.values(2, i) = fz;
                series.values(3, i) = fz * plate_y[p];
                series.values(4, i) = -fz * out.cop.x();
                series.values(5, i) = 0.0;
            }
        }
        if (k % marker_every == 0) {
            const Index i = k / marker_every;
            rec.pelvic.t[static_cast<std::size_t>(i)] = static_cast<double>(i) / task.rate_marker;
            rec.pelvic.values(0, i) = pelvis_mm.x();
            rec.pelvic.values(1, i) = pelvis_mm.y();
        }

        if (out.stepping) {
            diag.stepped = true;
            if (k < catch_step) stepped_before_catch = true;
            if (k < throw_step) stepped_before_throw = true;
        }
        state = out.state;
        sway += -sway * sway_decay + sway_kick * Vec2(sway_rng.normal(), sway_rng.normal());
    }

    rec.outcome.caught = !stepped_before_catch && speed_catch <= task.catch_speed_limit;
    rec.outcome.thrown = rec.outcome.caught && !stepped_before_throw;
    const double aim = std::abs(aim_rng.normal()) * task.aim_error;
    const double r_frac = speed_throw / task.throw_speed_ref + aim;
    rec.outcome.score = rec.outcome.thrown ? vr_score(r_frac) : 0;

    if (emg) {
        rec.emg = synthesize_emg(*emg, script.direction, t_on, t_catch, t_end, task.rate_emg,
                                 derive_seed(script.seed, 4));
    } else {
        EmgModel quiet;
        quiet.W = Eigen::MatrixXd::Zero(kChannelCount, 1);
        quiet.C_apr = Eigen::MatrixXd::Zero(1, 16);
        quiet.C_vpr = Eigen::MatrixXd::Zero(1, 8);
        rec.emg = synthesize_emg(quiet, script.direction, t_on, t_catch, t_end, task.rate_emg,
                                 derive_seed(script.seed, 4));
    }
    return result;
}

std::vector<Vec2> quiet_pelvic_points(const RigModel& rig, const TaskParams& task, int trials,
                                      std::uint64_t seed) {
    std::vector<Vec2> points;
    RigModel quiet_rig = rig;
    quiet_rig.boundary.reset();
    for (int i = 0; i < trials; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        TrialScript s;
        s.direction = kDirections[static_cast<std::size_t>(i % kDirectionCount)];
        s.perturbation_force = 0.0;
        s.t_perturb_onset = rng.uniform(0.0, kMaxOnsetDelay);
        s.seed = rng.next();
        const auto trial = run_trial(quiet_rig, task, s);
        const auto& p = trial.recording.pelvic;
        for (Index j = 0; j < p.samples(); ++j) points.emplace_back(p.values(0, j), p.values(1, j));
    }
    return points;
}

namespace {

std::vector<int> permutation(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(p[static_cast<std::size_t>(i)], p[j]);
    }
    return p;
}

}  // namespace

GroundTruth make_ground_truth(int n, Index muscles, Index columns, std::uint64_t seed) {
    if (n < 1 || n > muscles) throw ValidationError("make_ground_truth: n must be in 1..muscles");
    Rng rng(seed);
    const auto order = permutation(static_cast<int>(muscles), rng);
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) groups[i % static_cast<std::size_t>(n)].push_back(order[i]);

    std::size_t q = groups.front().size();
    std::size_t qmax = q;
    for (const auto& g : groups) {
        q = std::min(q, g.size());
        qmax = std::max(qmax, g.size());
    }
    // Smaller muscle groups get proportionally more cells so that every
    // synergy carries about the same energy.
    auto cells_for = [&](std::size_t size, Index t) -> Index {
        if (qmax == q) return t;
        return size == q ? static_cast<Index>(q + 1) * t : static_cast<Index>(q) * t;
    };
    auto total = [&](Index t) {
        Index s = 0;
        for (const auto& g : groups) s += cells_for(g.size(), t);
        return s;
    };
    if (total(1) > columns) {
        throw ValidationError("make_ground_truth: " + std::to_string(columns) + " columns cannot hold " +
                              std::to_string(n) + " exclusive synergies");
    }
    Index t = 1;
    while (total(t + 1) <= columns) ++t;

    GroundTruth gt;
    gt.W.resize(muscles, n);
    gt.C.resize(n, columns);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < muscles; ++i) gt.W(i, j) = 0.01 * rng.uniform();
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < columns; ++j) gt.C(i, j) = 0.01 * rng.uniform();
    }
    const auto cell_order = permutation(static_cast<int>(columns), rng);
    std::size_t next = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (int m : groups[i]) gt.W(m, static_cast<Index>(i)) = 0.95 + 0.05 * rng.uniform();
        const Index k = cells_for(groups[i].size(), t);
        for (Index j = 0; j < k; ++j) {
            gt.C(static_cast<Index>(i), cell_order[next++]) = 0.95 + 0.05 * rng.uniform();
        }
    }
    return gt;
}

SyntheticCohort generate_synthetic_cohort(const CohortSpec& spec) {
    if (spec.groups.empty()) throw ValidationError("generate_synthetic_cohort: no groups");
    if (spec.sessions < 1 || spec.trials_per_session < 1) {
        throw ValidationError("generate_synthetic_cohort: sessions and trials_per_session must be >= 1");
    }
    if (spec.noise < 0.0) throw ValidationError("generate_synthetic_cohort: noise must be >= 0");
    if (spec.mass_min <= 0.0 || spec.mass_max < spec.mass_min || spec.height_min <= 0.0 ||
        spec.height_max < spec.height_min) {
        throw ValidationError("generate_synthetic_cohort: invalid mass or height range");
    }
    spec.rig.check();

    SyntheticCohort out;
    out.cohort.trials_per_session = spec.trials_per_session;
    int subject_number = 0;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        const auto& gs = spec.groups[g];
        if (gs.n_syn < 1 || gs.n_syn > 10) {
            throw ValidationError("generate_synthetic_cohort: n_syn must be in 1..10");
        }
        if (gs.subjects < 1) throw ValidationError("generate_synthetic_cohort: subjects must be >= 1");

        GroupTruth truth;
        truth.group = gs.group;
        truth.n_syn = gs.n_syn;
        const auto gt = make_ground_truth(gs.n_syn, kChannelCount, 16, derive_seed(spec.seed, 100 + g));
        truth.W = gt.W;
        truth.C_apr = gt.C;
        Rng vpr_rng(derive_seed(spec.seed, 200 + g));
        truth.C_vpr.resize(gs.n_syn, 8);
        for (Index i = 0; i < truth.C_vpr.rows(); ++i) {
            for (Index j = 0; j < truth.C_vpr.cols(); ++j) truth.C_vpr(i, j) = 0.2 + 0.8 * vpr_rng.uniform();
        }

        for (int s = 0; s < gs.subjects; ++s) {
            ++subject_number;
            const std::uint64_t subject_seed = derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(subject_number));
            Rng rng(subject_seed);

            SubjectInfo info;
            char id[16];
            std::snprintf(id, sizeof id, "S%02d", subject_number);
            info.id = id;
            info.group = gs.group;
            info.handedness = rng.uniform() < 0.9 ? Handedness::right : Handedness::left;

            RigModel rig = spec.rig;
            rig.body.mass = rng.uniform(spec.mass_min, spec.mass_max);
            rig.body.com_height = rng.uniform(spec.height_min, spec.height_max);
            info.body_weight_n = rig.body.body_weight();
            for (Direction d : kDirections) {
                info.thresholds_n[d] = calibrate_threshold(rig, d, spec.calibration).force_n;
            }
            if (gs.ff_enabled) {
                const auto points = quiet_pelvic_points(rig, spec.task, std::max(1, spec.quiet_trials),
                                                        derive_seed(subject_seed, 1));
                rig.boundary = build_boundary(points, Vec2::Zero());
            }

            EmgModel emg;
            emg.W = truth.W;
            emg.C_apr = truth.C_apr;
            emg.C_vpr = truth.C_vpr;
            emg.gains.resize(kChannelCount);
            for (Index c = 0; c < kChannelCount; ++c) emg.gains(c) = 0.05 + 0.15 * rng.uniform();
            emg.cell_factors.resize(kChannelCount, 24);
            for (Index c = 0; c < kChannelCount; ++c) {
                for (Index j = 0; j < 24; ++j) emg.cell_factors(c, j) = std::max(0.0, 1.0 + spec.noise * rng.normal());
            }
            emg.trial_noise = spec.noise;

            for (int session = 1; session <= spec.sessions; ++session) {
                std::vector<Direction> plan;
                for (int i = 0; i < spec.trials_per_session; ++i) {
                    plan.push_back(kDirections[static_cast<std::size_t>(i % kDirectionCount)]);
                }
                const auto perm = permutation(spec.trials_per_session, rng);
                for (int i = 0; i < spec.trials_per_session; ++i) {
                    TrialScript script;
                    script.direction = plan[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
                    script.perturbation_force = info.thresholds_n.at(script.direction);
                    script.t_perturb_onset = rng.uniform(0.0, kMaxOnsetDelay);
                    script.perturbation_duration = spec.calibration.pulse_duration;
                    script.ff_enabled = gs.ff_enabled;
                    const int trial_id = (session - 1) * spec.trials_per_session + i + 1;
                    script.seed = derive_seed(subject_seed, 10000 + static_cast<std::uint64_t>(trial_id));

                    auto sim = run_trial(rig, spec.task, script, spec.synthesize ? &emg : nullptr);
                    sim.recording.trial_id = trial_id;
                    sim.recording.subject_id = info.id;
                    sim.recording.group = gs.group;
                    sim.recording.session = session;
                    out.cohort.trials.push_back(std::move(sim.recording));
                    out.diagnostics.push_back(sim.diagnostics);
                }
            }
            out.cohort.subjects.push_back(std::move(info));
        }
        out.truth.push_back(std::move(truth));
    }
    return out;
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json labels_json(const std::vector<binning::ColumnLabel>& labels) {
    json out = json::array();
    for (const auto& l : labels) {
        out.push_back(std::string(binning::to_string(l.bin)) + ":" + std::string(to_string(l.direction)));
    }
    return out;
}

}  // namespace

std::string ground_truth_json(const SyntheticCohort& cohort) {
    json root;
    json muscles = json::array();
    for (const auto& ch : standard_channels()) muscles.push_back(ch.label());
    root["muscles"] = muscles;
    auto vpr_labels = binning::phase_columns(binning::Phase::VPR, false);
    vpr_labels.resize(8);
    json groups = json::array();
    for (const auto& t : cohort.truth) {
        json g;
        g["group"] = std::string(to_string(t.group));
        g["n_syn"] = t.n_syn;
        g["W"] = matrix_json(t.W);
        g["apr_columns"] = labels_json(binning::phase_columns(binning::Phase::APR, true));
        g["C_apr"] = matrix_json(t.C_apr);
        g["vpr_columns"] = labels_json(vpr_labels);
        g["C_vpr"] = matrix_json(t.C_vpr);
        groups.push_back(std::move(g));
    }
    root["groups"] = groups;
    return root.dump(2) + "\n";
}

namespace {

class Reader {
public:
    Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw ValidationError("scenario: " + where_ + " must be an object");
        for (const auto& [key, value] : obj_.items()) unused_.push_back(key);
    }

    template <typename T>
    void get(const char* key, T& target) {
        if (!obj_.contains(key)) return;
        mark(key);
        try {
            target = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError("scenario: " + where_ + "." + key + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        if (!obj_.contains(key)) return nullptr;
        mark(key);
        return &obj_.at(key);
    }

    void finish() const {
        if (!unused_.empty()) throw ValidationError("scenario: unknown key " + where_ + "." + unused_.front());
    }

private:
    void mark(const std::string& key) { unused_.erase(std::remove(unused_.begin(), unused_.end(), key), unused_.end()); }

    const json& obj_;
    std::string where_;
    std::vector<std::string> unused_;
};

void read_range(Reader& r, const char* key, double& lo, double& hi) {
    std::vector<double> v{lo, hi};
    r.get(key, v);
    if (v.size() != 2) throw ValidationError(std::string("scenario: ") + key + " must be [min, max]");
    lo = v[0];
    hi = v[1];
}

}  // namespace

CohortSpec parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: invalid JSON: ") + e.what());
    }
    CohortSpec spec;
    Reader r(root, "scenario");
    r.get("seed", spec.seed);
    r.get("noise", spec.noise);
    r.get("sessions", spec.sessions);
    r.get("trials_per_session", spec.trials_per_session);
    r.get("quiet_trials", spec.quiet_trials);
    r.get("synthesize_emg", spec.synthesize);
    read_range(r, "subject_mass_kg", spec.mass_min, spec.mass_max);
    read_range(r, "com_height_m", spec.height_min, spec.height_max);

    if (const json* groups = r.child("groups")) {
        if (!groups->is_array()) throw ValidationError("scenario: groups must be an array");
        spec.groups.clear();
        for (const auto& g : *groups) {
            Reader gr(g, "groups[]");
            GroupSpec gs;
            std::string name = "FF";
            gr.get("group", name);
            gs.group = parse_group(name);
            gs.ff_enabled = gs.group == Group::FF;
            gr.get("subjects", gs.subjects);
            gr.get("n_syn", gs.n_syn);
            gr.get("ff_enabled", gs.ff_enabled);
            gr.finish();
            spec.groups.push_back(gs);
        }
    }
    if (const json* rig = r.child("rig")) {
        Reader rr(*rig, "rig");
        if (const json* pulleys = rr.child("pulleys_m")) {
            std::vector<std::vector<double>> p;
            try {
                p = pulleys->get<std::vector<std::vector<double>>>();
            } catch (const json::exception&) {
                throw ValidationError("scenario: rig.pulleys_m must be 4 [x, y] pairs");
            }
            if (p.size() != 4) throw ValidationError("scenario: rig.pulleys_m must be 4 [x, y] pairs");
            for (std::size_t i = 0; i < 4; ++i) {
                if (p[i].size() != 2) throw ValidationError("scenario: rig.pulleys_m must be 4 [x, y] pairs");
                spec.rig.pulleys[i] = Vec2(p[i][0], p[i][1]);
            }
        }
        rr.get("belt_radius_m", spec.rig.belt_radius);
        rr.get("max_cable_tension_N", spec.rig.max_cable_tension);
        rr.get("force_field_gain_N_per_m", spec.rig.force_field_gain);
        rr.get("force_field_damping_N_s_per_m", spec.rig.force_field_damping);
        rr.get("force_field_saturation_N", spec.rig.force_field_saturation);
        if (const json* b = rr.child("body")) {
            Reader br(*b, "rig.body");
            auto& body = spec.rig.body;
            br.get("mass_kg", body.mass);
            br.get("com_height_m", body.com_height);
            br.get("support_ap_m", body.support_ap);
            br.get("support_ml_m", body.support_ml);
            br.get("stance_half_width_m", body.stance_half_width);
            br.get("damping_Ns_per_m", body.damping);
            br.get("response_rate_rad_s", body.response_rate);
            br.get("pelvic_coupling", body.pelvic_coupling);
            br.get("gravity_m_s2", body.gravity);
            br.finish();
        }
        rr.finish();
    }
    if (const json* t = r.child("task")) {
        Reader tr(*t, "task");
        auto& task = spec.task;
        tr.get("t_vr_onset_s", task.t_vr_onset);
        tr.get("ball_distance_m", task.ball_distance);
        tr.get("ball_speed_m_s", task.ball_speed);
        tr.get("uncertainty_radius_m", task.uncertainty_radius);
        tr.get("target_distance_m", task.target_distance);
        tr.get("target_radius_m", task.target_radius);
        tr.get("throw_delay_s", task.throw_delay);
        tr.get("reach_gain_bw", task.reach_gain);
        tr.get("sway_noise_bw", task.sway_noise);
        tr.get("sway_time_constant_s", task.sway_time_constant);
        tr.get("catch_speed_limit_m_s", task.catch_speed_limit);
        tr.get("throw_speed_ref_m_s", task.throw_speed_ref);
        tr.get("aim_error", task.aim_error);
        tr.get("dt_s", task.dt);
        tr.get("rate_emg_hz", task.rate_emg);
        tr.get("rate_plate_hz", task.rate_plate);
        tr.get("rate_marker_hz", task.rate_marker);
        tr.finish();
    }
    if (const json* c = r.child("calibration")) {
        Reader cr(*c, "calibration");
        auto& cal = spec.calibration;
        cr.get("start_fraction", cal.start_fraction);
        cr.get("step_fraction", cal.step_fraction);
        cr.get("cap_fraction", cal.cap_fraction);
        cr.get("pulse_duration_s", cal.pulse_duration);
        cr.get("dt_s", cal.dt);
        cr.get("settle_s", cal.settle);
        cr.finish();
    }
    r.finish();
    return spec;
}

CohortSpec load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

std::string scenario_json(const CohortSpec& spec) {
    json root;
    root["seed"] = spec.seed;
    root["noise"] = spec.noise;
    root["sessions"] = spec.sessions;
    root["trials_per_session"] = spec.trials_per_session;
    root["quiet_trials"] = spec.quiet_trials;
    root["synthesize_emg"] = spec.synthesize;
    root["subject_mass_kg"] = {spec.mass_min, spec.mass_max};
    root["com_height_m"] = {spec.height_min, spec.height_max};
    json groups = json::array();
    for (const auto& g : spec.groups) {
        groups.push_back({{"group", std::string(to_string(g.group))},
                          {"subjects", g.subjects},
                          {"n_syn", g.n_syn},
                          {"ff_enabled", g.ff_enabled}});
    }
    root["groups"] = groups;
    json pulleys = json::array();
    for (const auto& p : spec.rig.pulleys) pulleys.push_back({p.x(), p.y()});
    const auto& b = spec.rig.body;
    root["rig"] = {{"pulleys_m", pulleys},
                   {"belt_radius_m", spec.rig.belt_radius},
                   {"max_cable_tension_N", spec.rig.max_cable_tension},
                   {"force_field_gain_N_per_m", spec.rig.force_field_gain},
                   {"force_field_damping_N_s_per_m", spec.rig.force_field_damping},
                   {"force_field_saturation_N", spec.rig.force_field_saturation},
                   {"body",
                    {{"mass_kg", b.mass},
                     {"com_height_m", b.com_height},
                     {"support_ap_m", b.support_ap},
                     {"support_ml_m", b.support_ml},
                     {"stance_half_width_m", b.stance_half_width},
                     {"damping_Ns_per_m", b.damping},
                     {"response_rate_rad_s", b.response_rate},
                     {"pelvic_coupling", b.pelvic_coupling},
                     {"gravity_m_s2", b.gravity}}}};
    const auto& t = spec.task;
    root["task"] = {{"t_vr_onset_s", t.t_vr_onset},
                    {"ball_distance_m", t.ball_distance},
                    {"ball_speed_m_s", t.ball_speed},
                    {"uncertainty_radius_m", t.uncertainty_radius},
                    {"target_distance_m", t.target_distance},
                    {"target_radius_m", t.target_radius},
                    {"throw_delay_s", t.throw_delay},
                    {"reach_gain_bw", t.reach_gain},
                    {"sway_noise_bw", t.sway_noise},
                    {"sway_time_constant_s", t.sway_time_constant},
                    {"catch_speed_limit_m_s", t.catch_speed_limit},
                    {"throw_speed_ref_m_s", t.throw_speed_ref},
                    {"aim_error", t.aim_error},
                    {"dt_s", t.dt},
                    {"rate_emg_hz", t.rate_emg},
                    {"rate_plate_hz", t.rate_plate},
                    {"rate_marker_hz", t.rate_marker}};
    const auto& c = spec.calibration;
    root["calibration"] = {{"start_fraction", c.start_fraction},
                           {"step_fraction", c.step_fraction},
                           {"cap_fraction", c.cap_fraction},
                           {"pulse_duration_s", c.pulse_duration},
                           {"dt_s", c.dt},
                           {"settle_s", c.settle}};
    return root.dump(2) + "\n";
}

}  // namespace posyn::sim
