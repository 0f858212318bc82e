#include "posyn/synergy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "posyn/error.hpp"
#include "posyn/rng.hpp"

namespace posyn::synergy {

namespace {

constexpr double kEps = 1e-12;

void check_same_shape(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Vr) {
    if (V.rows() != Vr.rows() || V.cols() != Vr.cols()) {
        throw ValidationError("vaf: shape mismatch (" + std::to_string(V.rows()) + "x" +
                              std::to_string(V.cols()) + " vs " + std::to_string(Vr.rows()) + "x" +
                              std::to_string(Vr.cols()) + ")");
    }
}

}  // namespace

double vaf(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Vr) {
    check_same_shape(V, Vr);
    const double energy = V.squaredNorm();
    if (!(energy > 0.0)) throw ValidationError("vaf: V is identically zero");
    return (1.0 - (V - Vr).squaredNorm() / energy) * 100.0;
}

std::vector<std::optional<double>> vaf_rows(const Eigen::MatrixXd& V, const Eigen::MatrixXd& Vr) {
    check_same_shape(V, Vr);
    std::vector<std::optional<double>> out;
    out.reserve(static_cast<std::size_t>(V.rows()));
    for (Index r = 0; r < V.rows(); ++r) {
        const double energy = V.row(r).squaredNorm();
        if (energy > 0.0) {
            out.emplace_back((1.0 - (V.row(r) - Vr.row(r)).squaredNorm() / energy) * 100.0);
        } else {
            out.emplace_back(std::nullopt);
        }
    }
    return out;
}

namespace {

struct RunResult {
    Eigen::MatrixXd W;
    Eigen::MatrixXd C;
    double error = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

RunResult run_once(const Eigen::MatrixXd& V, int n, std::uint64_t seed, int max_iter, double tol,
                   bool record) {
    const Index m = V.rows();
    const Index k = V.cols();
    Rng rng(seed);
    const double scale = std::sqrt(V.mean() / n);

    RunResult r;
    r.W.resize(m, n);
    r.C.resize(n, k);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) r.W(i, j) = scale * (0.01 + rng.uniform());
    }
    for (Index j = 0; j < k; ++j) {
        for (Index i = 0; i < n; ++i) r.C(i, j) = scale * (0.01 + rng.uniform());
    }

    Eigen::MatrixXd WtV(n, k), WtW(n, n), WtWC(n, k), VCt(m, n), CCt(n, n), WCCt(m, n), R(m, k);
    const double v_norm = V.norm();
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iter; ++it) {
        WtV.noalias() = r.W.transpose() * V;
        WtW.noalias() = r.W.transpose() * r.W;
        WtWC.noalias() = WtW * r.C;
        r.C = r.C.cwiseProduct(WtV.cwiseQuotient((WtWC.array() + kEps).matrix()));

        VCt.noalias() = V * r.C.transpose();
        CCt.noalias() = r.C * r.C.transpose();
        WCCt.noalias() = r.W * CCt;
        r.W = r.W.cwiseProduct(VCt.cwiseQuotient((WCCt.array() + kEps).matrix()));

        R = V;
        R.noalias() -= r.W * r.C;
        const double err = R.norm();
        if (record) r.history.push_back(err);
        r.error = err;
        r.iterations = it;
        if (err <= 1e-13 * v_norm || (prev - err) < tol * prev) {
            r.converged = true;
            break;
        }
        prev = err;
    }
    return r;
}

void check_input(const Eigen::MatrixXd& V, int n) {
    if (V.size() == 0) throw ValidationError("nmf: empty matrix");
    const Index limit = std::min(V.rows(), V.cols());
    if (n < 1 || n > limit) {
        throw ValidationError("nmf: n = " + std::to_string(n) + " outside 1.." + std::to_string(limit));
    }
    for (Index j = 0; j < V.cols(); ++j) {
        for (Index i = 0; i < V.rows(); ++i) {
            const double v = V(i, j);
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ValidationError("nmf: V contains a negative or non-finite entry at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
            }
        }
    }
    if (!(V.maxCoeff() > 0.0)) throw ValidationError("nmf: V is identically zero");
}

}  // namespace

SynergySet nmf_factorize(const Eigen::MatrixXd& V, const NmfOptions& options) {
    check_input(V, options.n);
    if (options.restarts < 1) throw ValidationError("nmf: restarts must be >= 1");
    if (options.max_iter < 1) throw ValidationError("nmf: max_iter must be >= 1");

    RunResult best;
    for (int r = 0; r < options.restarts; ++r) {
        auto run = run_once(V, options.n, derive_seed(options.seed, static_cast<std::uint64_t>(r)),
                            options.max_iter, options.tol, options.record_history);
        // Strict comparison keeps the earliest restart on ties.
        if (run.error < best.error) best = std::move(run);
    }

    SynergySet set;
    set.n_syn = options.n;
    set.rng_seed = options.seed;
    set.restarts = options.restarts;
    set.iterations = best.iterations;
    set.converged = best.converged;
    set.error_history = std::move(best.history);
    set.W = std::move(best.W);
    set.C = std::move(best.C);
    for (Index j = 0; j < set.W.cols(); ++j) {
        const double peak = set.W.col(j).maxCoeff();
        if (peak > 0.0) {
            set.W.col(j) /= peak;
            set.C.row(j) *= peak;
        }
    }
    const Eigen::MatrixXd recon = set.W * set.C;
    set.error = (V - recon).norm();
    set.vaf_total = vaf(V, recon);
    set.vaf_per_muscle = vaf_rows(V, recon);
    return set;
}

std::uint64_t scan_seed(std::uint64_t root, int n) {
    return derive_seed(root, 0x5eed0000ULL + static_cast<std::uint64_t>(n));
}

Selection select_n_syn(const Eigen::MatrixXd& V, const SelectOptions& options) {
    const int n_max = static_cast<int>(std::min<Index>({options.n_max, V.rows(), V.cols()}));
    if (n_max < 1) throw ValidationError("select_n_syn: n_max must be >= 1");
    if (options.fixed_n < 0 || options.fixed_n > n_max) {
        throw ValidationError("select_n_syn: fixed n " + std::to_string(options.fixed_n) + " outside 1.." +
                              std::to_string(n_max));
    }

    Selection out;
    std::vector<SynergySet> sets;
    for (int n = 1; n <= n_max; ++n) {
        NmfOptions o;
        o.n = n;
        o.seed = scan_seed(options.seed, n);
        o.restarts = options.restarts;
        o.max_iter = options.max_iter;
        o.tol = options.tol;
        sets.push_back(nmf_factorize(V, o));
        out.vaf_scan.push_back(sets.back().vaf_total);
        if (n > 1 && out.vaf_scan[n - 1] < out.vaf_scan[n - 2]) {
            out.monotonicity_violations.push_back(n);
        }
    }
    int chosen = n_max;
    if (options.fixed_n > 0) {
        chosen = options.fixed_n;
        out.criterion_met = out.vaf_scan[chosen - 1] > options.criterion;
    }
    for (int n = 1; n <= n_max && options.fixed_n == 0; ++n) {
        if (out.vaf_scan[n - 1] > options.criterion) {
            chosen = n;
            out.criterion_met = true;
            break;
        }
    }
    out.n_syn = chosen;
    out.chosen = std::move(sets[static_cast<std::size_t>(chosen - 1)]);
    out.chosen.vaf_scan = out.vaf_scan;
    return out;
}

std::vector<double> per_synergy_vaf(const Eigen::MatrixXd& V, const SynergySet& set,
                                    PerSynergyVaf mode) {
    const Index n = set.W.cols();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    if (mode == PerSynergyVaf::rank_one) {
        for (Index i = 0; i < n; ++i) {
            out.push_back(vaf(V, set.W.col(i) * set.C.row(i)));
        }
    } else {
        Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(V.rows(), V.cols());
        double previous = 0.0;
        for (Index i = 0; i < n; ++i) {
            partial += set.W.col(i) * set.C.row(i);
            const double now = vaf(V, partial);
            out.push_back(now - previous);
            previous = now;
        }
    }
    return out;
}

TuningCurves tuning_curves(const SynergySet& set, const std::vector<binning::ColumnLabel>& labels) {
    if (static_cast<Index>(labels.size()) != set.C.cols()) {
        throw ValidationError("tuning_curves: " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(set.C.cols()) + " columns");
    }
    TuningCurves out;
    for (const auto& l : labels) {
        if (std::find(out.bins.begin(), out.bins.end(), l.bin) == out.bins.end()) out.bins.push_back(l.bin);
        if (std::find(out.directions.begin(), out.directions.end(), l.direction) == out.directions.end()) {
            out.directions.push_back(l.direction);
        }
    }
    if (out.bins.size() * out.directions.size() != labels.size()) {
        throw ValidationError("tuning_curves: labels do not form a complete bin x direction grid");
    }
    const auto nb = static_cast<Index>(out.bins.size());
    const auto nd = static_cast<Index>(out.directions.size());
    Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(nb, nd);
    for (Index i = 0; i < set.C.rows(); ++i) out.curves.emplace_back(Eigen::MatrixXd::Zero(nb, nd));
    for (std::size_t j = 0; j < labels.size(); ++j) {
        const auto b = std::find(out.bins.begin(), out.bins.end(), labels[j].bin) - out.bins.begin();
        const auto d = std::find(out.directions.begin(), out.directions.end(), labels[j].direction) -
                       out.directions.begin();
        if (seen(b, d)++) throw ValidationError("tuning_curves: duplicate column label");
        for (Index i = 0; i < set.C.rows(); ++i) out.curves[static_cast<std::size_t>(i)](b, d) = set.C(i, static_cast<Index>(j));
    }
    return out;
}

Eigen::MatrixXd flatten(const TuningCurves& curves, const std::vector<binning::ColumnLabel>& labels) {
    Eigen::MatrixXd C(static_cast<Index>(curves.curves.size()), static_cast<Index>(labels.size()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
        const auto bi = std::find(curves.bins.begin(), curves.bins.end(), labels[j].bin);
        const auto di = std::find(curves.directions.begin(), curves.directions.end(), labels[j].direction);
        if (bi == curves.bins.end() || di == curves.directions.end()) {
            throw ValidationError("flatten: label not present in tuning curves");
        }
        for (std::size_t i = 0; i < curves.curves.size(); ++i) {
            C(static_cast<Index>(i), static_cast<Index>(j)) =
                curves.curves[i](bi - curves.bins.begin(), di - curves.directions.begin());
        }
    }
    return C;
}

double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) return 0.0;
    return x.dot(y) / (nx * ny);
}

Matching match_synergies(const Eigen::MatrixXd& Wa, const Eigen::MatrixXd& Wb) {
    if (Wa.rows() != Wb.rows()) {
        throw ValidationError("match_synergies: muscle count mismatch (" + std::to_string(Wa.rows()) +
                              " vs " + std::to_string(Wb.rows()) + ")");
    }
    const bool swapped = Wa.cols() > Wb.cols();
    const Eigen::MatrixXd& small = swapped ? Wb : Wa;
    const Eigen::MatrixXd& large = swapped ? Wa : Wb;
    const int ns = static_cast<int>(small.cols());
    const int nl = static_cast<int>(large.cols());

    Eigen::MatrixXd cos(ns, nl);
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nl; ++j) cos(i, j) = cosine_similarity(small.col(i), large.col(j));
    }

    std::vector<int> current(static_cast<std::size_t>(ns), -1);
    std::vector<int> best = current;
    std::vector<bool> used(static_cast<std::size_t>(nl), false);
    double best_total = -std::numeric_limits<double>::infinity();

    // Depth-first enumeration of injective maps small -> large, in
    // lexicographic order; the first maximum found is kept.
    std::function<void(int, double)> search = [&](int i, double total) {
        if (i == ns) {
            if (total > best_total + 1e-12) {
                best_total = total;
                best = current;
            }
            return;
        }
        for (int j = 0; j < nl; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            used[static_cast<std::size_t>(j)] = true;
            current[static_cast<std::size_t>(i)] = j;
            search(i + 1, total + cos(i, j));
            used[static_cast<std::size_t>(j)] = false;
        }
    };
    search(0, 0.0);

    Matching out;
    out.total_cosine = ns > 0 ? best_total : 0.0;
    std::vector<bool> large_used(static_cast<std::size_t>(nl), false);
    for (int i = 0; i < ns; ++i) {
        const int j = best[static_cast<std::size_t>(i)];
        large_used[static_cast<std::size_t>(j)] = true;
        SynergyPair p;
        p.a = swapped ? j : i;
        p.b = swapped ? i : j;
        p.cosine = cos(i, j);
        out.pairs.push_back(p);
    }
    if (swapped) {
        std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    }
    for (int j = 0; j < nl; ++j) {
        if (!large_used[static_cast<std::size_t>(j)]) (swapped ? out.unmatched_a : out.unmatched_b).push_back(j);
    }
    return out;
}

Matching match_synergies(const SynergySet& a, const SynergySet& b) { return match_synergies(a.W, b.W); }

}  // namespace posyn::synergy
