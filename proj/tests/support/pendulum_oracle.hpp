#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "posyn/simulator.hpp"

namespace posyn::fixtures {

/// Exact continuous-time pulse response of the stabilized pendulum along one
/// axis, from the matrix exponential of the linear closed loop. Returns the
/// peak |COP demand| per newton of pulse force.
inline double peak_demand_per_newton(const sim::BodyParams& body, double duration, double settle,
                                     double grid = 1e-4) {
    const double kp = body.kp(), kd = body.kd(), w2 = body.omega2();
    Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
    aug(0, 1) = 1.0;
    aug(1, 0) = -kp;
    aug(1, 1) = -(kd + body.damping / body.mass);
    aug(1, 2) = body.pelvic_coupling / body.mass;
    Eigen::Matrix3d free = aug;
    free(1, 2) = 0.0;
    const Eigen::Matrix3d on = (aug * grid).exp();
    const Eigen::Matrix3d off = (free * grid).exp();
    Eigen::Vector3d s(0.0, 0.0, 1.0);
    double peak = 0.0;
    const auto steps = static_cast<long>(std::llround((duration + settle) / grid));
    const auto pulse = static_cast<long>(std::llround(duration / grid));
    for (long k = 0; k < steps; ++k) {
        s = (k < pulse ? on : off) * s;
        peak = std::max(peak, std::abs(s(0) * (1.0 + kp / w2) + s(1) * kd / w2));
    }
    return peak;
}

/// Smallest pulse force (N) along `axis` that drives the demand to the
/// support edge.
inline double analytic_pulse_threshold(const sim::BodyParams& body, int axis, double duration, double settle) {
    return body.support(axis) / peak_demand_per_newton(body, duration, settle);
}

/// Default body with the AP support rescaled so the analytic pulse
/// threshold is `fraction` of body weight.
inline sim::BodyParams body_with_threshold(double fraction, const sim::CalibrationOptions& o = {}) {
    sim::BodyParams b;
    const double f0 = analytic_pulse_threshold(b, 0, o.pulse_duration, o.settle) / b.body_weight();
    b.support_ap *= fraction / f0;
    return b;
}

}  // namespace posyn::fixtures
