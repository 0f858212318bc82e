#include "posyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "posyn/error.hpp"

namespace posyn::stats {

std::string_view to_string(Method m) {
    return m == Method::mann_whitney_u ? "mann_whitney_u" : "independent_t";
}

std::string_view to_string(Alternative a) {
    switch (a) {
        case Alternative::two_sided: return "two_sided";
        case Alternative::less: return "less";
        case Alternative::greater: return "greater";
    }
    return "?";
}

Alternative parse_alternative(std::string_view s) {
    if (s == "two_sided" || s == "two-sided") return Alternative::two_sided;
    if (s == "less") return Alternative::less;
    if (s == "greater") return Alternative::greater;
    throw ValidationError("unknown alternative '" + std::string(s) + "'");
}

MwuMode parse_mwu_mode(std::string_view s) {
    if (s == "auto" || s == "automatic") return MwuMode::automatic;
    if (s == "exact") return MwuMode::exact;
    if (s == "normal" || s == "normal_approx") return MwuMode::normal_approx;
    throw ValidationError("unknown Mann-Whitney mode '" + std::string(s) + "'");
}

std::vector<double> midranks(std::span<const double> pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double u_statistic(std::span<const double> a, std::span<const double> b) {
    double u = 0.0;
    for (double x : a) {
        for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    }
    return u;
}

namespace {

void check_finite(std::span<const double> s, const char* name) {
    for (double v : s) {
        if (!std::isfinite(v)) throw ValidationError(std::string(name) + " contains a non-finite value");
    }
}

double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, MwuMode mode,
                          Alternative alternative) {
    if (a.empty() || b.empty()) throw ValidationError("mann_whitney_u: empty sample");
    check_finite(a, "mann_whitney_u: first sample");
    check_finite(b, "mann_whitney_u: second sample");

    const int n1 = static_cast<int>(a.size());
    const int n2 = static_cast<int>(b.size());
    const int N = n1 + n2;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    double r1 = 0.0;
    for (int i = 0; i < n1; ++i) r1 += ranks[static_cast<std::size_t>(i)];
    const double u = r1 - 0.5 * n1 * (n1 + 1.0);
    const double mean_u = 0.5 * n1 * n2;

    TestResult res;
    res.method = Method::mann_whitney_u;
    res.statistic = u;
    res.n1 = n1;
    res.n2 = n2;

    // Tie-corrected variance.
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var_u = n1 * n2 / 12.0 * ((N + 1.0) - tie_term / (static_cast<double>(N) * (N - 1.0)));
    const double sd = var_u > 0.0 ? std::sqrt(var_u) : 0.0;
    res.z = sd > 0.0 ? (u - mean_u) / sd : 0.0;
    res.effect_size = res.z * res.z / N;

    const bool exact = mode == MwuMode::exact || (mode == MwuMode::automatic && N <= kExactLimit);
    if (exact) {
        if (N > kExactLimit) {
            throw ValidationError("mann_whitney_u: exact mode supports n1 + n2 <= " + std::to_string(kExactLimit));
        }
        res.exact = true;
        // Enumerate every subset of size n1 of the pooled midranks. Doubled
        // ranks keep the sums integral so comparisons are exact.
        std::vector<long> twice(ranks.size());
        for (std::size_t i = 0; i < ranks.size(); ++i) twice[i] = std::lround(2.0 * ranks[i]);
        long observed = 0;
        for (int i = 0; i < n1; ++i) observed += twice[static_cast<std::size_t>(i)];
        const long centre = static_cast<long>(n1) * (N + 1);  // E[2 R1]
        const long dev_obs = std::abs(observed - centre);
        long total = 0, le = 0, ge = 0, extreme = 0;
        std::vector<int> pick(static_cast<std::size_t>(n1));
        std::iota(pick.begin(), pick.end(), 0);
        while (true) {
            long s = 0;
            for (int idx : pick) s += twice[static_cast<std::size_t>(idx)];
            ++total;
            if (s <= observed) ++le;
            if (s >= observed) ++ge;
            if (std::abs(s - centre) >= dev_obs) ++extreme;
            int k = n1 - 1;
            while (k >= 0 && pick[static_cast<std::size_t>(k)] == N - n1 + k) --k;
            if (k < 0) break;
            ++pick[static_cast<std::size_t>(k)];
            for (int m = k + 1; m < n1; ++m) pick[static_cast<std::size_t>(m)] = pick[static_cast<std::size_t>(m - 1)] + 1;
        }
        const double t = static_cast<double>(total);
        switch (alternative) {
            case Alternative::two_sided: res.p_value = extreme / t; break;
            case Alternative::less: res.p_value = le / t; break;
            case Alternative::greater: res.p_value = ge / t; break;
        }
        res.p_value = clamp_p(res.p_value);
        return res;
    }

    boost::math::normal_distribution<> normal;
    if (!(sd > 0.0)) {
        res.p_value = 1.0;
        return res;
    }
    const double diff = u - mean_u;
    double p = 1.0;
    switch (alternative) {
        case Alternative::two_sided: {
            const double zc = std::max(0.0, std::abs(diff) - 0.5) / sd;
            p = 2.0 * boost::math::cdf(boost::math::complement(normal, zc));
            break;
        }
        case Alternative::greater: p = boost::math::cdf(boost::math::complement(normal, (diff - 0.5) / sd)); break;
        case Alternative::less: p = boost::math::cdf(normal, (diff + 0.5) / sd); break;
    }
    res.p_value = clamp_p(p);
    return res;
}

TestResult independent_t(std::span<const double> a, std::span<const double> b, Alternative alternative) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("independent_t: each sample needs at least 2 values");
    check_finite(a, "independent_t: first sample");
    check_finite(b, "independent_t: second sample");
    auto mean = [](std::span<const double> s) {
        return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    };
    auto ss = [](std::span<const double> s, double m) {
        double acc = 0.0;
        for (double v : s) acc += (v - m) * (v - m);
        return acc;
    };
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double m1 = mean(a);
    const double m2 = mean(b);
    const double df = n1 + n2 - 2.0;
    const double pooled = (ss(a, m1) + ss(b, m2)) / df;
    if (!(pooled > 0.0)) throw ValidationError("independent_t: both samples have zero variance");

    TestResult res;
    res.method = Method::independent_t;
    res.n1 = static_cast<int>(a.size());
    res.n2 = static_cast<int>(b.size());
    res.df = df;
    res.statistic = (m1 - m2) / std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
    res.effect_size = (m1 - m2) / std::sqrt(pooled);

    boost::math::students_t dist(df);
    const double t = res.statistic;
    switch (alternative) {
        case Alternative::two_sided: res.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))); break;
        case Alternative::greater: res.p_value = boost::math::cdf(boost::math::complement(dist, t)); break;
        case Alternative::less: res.p_value = boost::math::cdf(dist, t); break;
    }
    res.p_value = clamp_p(res.p_value);
    return res;
}

}  // namespace posyn::stats
