#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "posyn/simulator.hpp"
#include "posyn/types.hpp"

namespace posyn::fixtures {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("posyn_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Small two-group simulated cohort (one subject per group, one session).
inline sim::SyntheticCohort tiny_cohort(int trials = 8, std::uint64_t seed = 3, bool synthesize = true) {
    sim::CohortSpec spec;
    spec.seed = seed;
    spec.groups = {{Group::FF, 1, 4, true}, {Group::NoFF, 1, 8, false}};
    spec.sessions = 1;
    spec.trials_per_session = trials;
    spec.quiet_trials = 4;
    spec.synthesize = synthesize;
    return sim::generate_synthetic_cohort(spec);
}

inline Eigen::MatrixXd random_nonnegative(Index rows, Index cols, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = u(gen);
    }
    return m;
}

/// Random nonnegative factor with about half of the entries zero and the
/// rest uniform in (0, 1]; no all-zero row or column.
inline Eigen::MatrixXd sparse_nonnegative(Index rows, Index cols, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    do {
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                const bool zero = u(gen) < 0.5;
                const double v = 1.0 - u(gen);
                m(i, j) = zero ? 0.0 : v;
            }
        }
    } while ((m.colwise().maxCoeff().array() == 0.0).any() || (m.rowwise().maxCoeff().array() == 0.0).any());
    return m;
}

/// Uniform stream of one sinusoid per channel.
inline UniformSeries sine_series(double freq, double rate, double seconds, Index channels = 1, double amp = 1.0) {
    UniformSeries s;
    s.rate = rate;
    const auto n = static_cast<Index>(seconds * rate);
    s.values.resize(channels, n);
    for (Index i = 0; i < n; ++i) {
        const double v = amp * std::sin(2.0 * 3.14159265358979323846 * freq * static_cast<double>(i) / rate);
        s.values.col(i).setConstant(v);
    }
    return s;
}

}  // namespace posyn::fixtures
