#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posyn/binning.hpp"
#include "posyn/types.hpp"

namespace posyn::synergy {

inline constexpr int kMaxSynergies = 10;
inline constexpr double kDefaultCriterion = 90.0;

struct NmfOptions {
    int n = 1;
    std::uint64_t seed = 1;
    int restarts = 20;
    int max_iter = 5000;
    double tol = 1e-8;
    /// Keep the per-iteration error history of the winning restart.
    bool record_history = false;
};

struct SynergySet {
    Eigen::MatrixXd W;  ///< muscles x n, each column max 1
    Eigen::MatrixXd C;  ///< n x conditions, nonnegative
    int n_syn = 0;
    double vaf_total = 0.0;
    /// Per-muscle VAF; empty for all-zero rows where VAF is undefined.
    std::vector<std::optional<double>> vaf_per_muscle;
    std::vector<double> vaf_scan;  ///< index k holds the VAF for n = k + 1
    std::uint64_t rng_seed = 0;
    int restarts = 0;
    int iterations = 0;       ///< iterations used by the winning restart
    bool converged = false;
    double error = 0.0;       ///< Frobenius norm of V - WC
    std::vector<double> error_history;
};

/// VAF in percent: (1 - sum (V - Vr)^2 / sum V^2) * 100.
double vaf(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Vr);

/// Row-wise VAF; rows of V that are identically zero yield nullopt.
std::vector<std::optional<double>> vaf_rows(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Vr);

/// Lee-Seung multiplicative updates for the Frobenius loss, best of
/// `restarts` random nonnegative starts. Columns of W are scaled to max 1
/// with the scale folded into C.
SynergySet nmf_factorize(const Eigen::MatrixXd& V, const NmfOptions& options);

struct SelectOptions {
    double criterion = kDefaultCriterion;
    std::uint64_t seed = 1;
    int restarts = 20;
    int max_iter = 5000;
    double tol = 1e-8;
    int n_max = kMaxSynergies;
    /// 0 picks n by the criterion; otherwise the scan still runs and this
    /// order is returned.
    int fixed_n = 0;
};

struct Selection {
    int n_syn = 0;
    bool criterion_met = false;
    std::vector<double> vaf_scan;        ///< n = 1 .. n_max
    std::vector<int> monotonicity_violations;  ///< n where vaf(n) < vaf(n - 1)
    SynergySet chosen;
};

/// Scans n = 1..n_max and returns the least n whose total VAF exceeds the
/// criterion; if none does, returns n_max with criterion_met = false.
Selection select_n_syn(const Eigen::MatrixXd& V, const SelectOptions& options);

/// Seed used for the factorization at model order n inside select_n_syn.
std::uint64_t scan_seed(std::uint64_t root, int n);

enum class PerSynergyVaf { rank_one, incremental };

/// Per-component VAF. rank_one: VAF of W_i c_i alone against V.
/// incremental: VAF of the first i components minus that of the first i - 1.
std::vector<double> per_synergy_vaf(const Eigen::MatrixXd& V, const SynergySet& set,
                                    PerSynergyVaf mode = PerSynergyVaf::rank_one);

struct TuningCurves {
    std::vector<binning::Bin> bins;
    std::vector<Direction> directions;
    std::vector<Eigen::MatrixXd> curves;  ///< one bins x directions grid per synergy
};

TuningCurves tuning_curves(const SynergySet& set, const std::vector<binning::ColumnLabel>& labels);

/// Inverse of tuning_curves: rebuilds C in the given column order.
Eigen::MatrixXd flatten(const TuningCurves& curves, const std::vector<binning::ColumnLabel>& labels);

struct SynergyPair {
    int a = 0;
    int b = 0;
    double cosine = 0.0;
};

struct Matching {
    std::vector<SynergyPair> pairs;  ///< ordered by index in the smaller set
    std::vector<int> unmatched_a;
    std::vector<int> unmatched_b;
    double total_cosine = 0.0;
};

double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Exhaustive search for the assignment of min(nA, nB) pairs maximizing the
/// summed cosine similarity between W columns.
Matching match_synergies(const Eigen::MatrixXd& Wa, const Eigen::MatrixXd& Wb);
Matching match_synergies(const SynergySet& a, const SynergySet& b);

}  // namespace posyn::synergy
