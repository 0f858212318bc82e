#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "posyn/error.hpp"
#include "posyn/stats.hpp"

using namespace posyn::stats;

namespace {

// Two-sided exact p by listing every labeling of the pooled values.
double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size(), n1 = a.size();
    const double centre = static_cast<double>(n1 * b.size()) / 2.0;
    const double observed = std::abs(u_statistic(a, b) - centre);
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), true);
    std::sort(pick.begin(), pick.end());
    long total = 0, extreme = 0;
    do {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) (pick[i] ? x : y).push_back(pooled[i]);
        ++total;
        if (std::abs(u_statistic(x, y) - centre) >= observed - 1e-9) ++extreme;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

TEST(MannWhitney, HandU) {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const auto r = mann_whitney_u(a, b);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.p_value, 0.1, 1e-12);
}

TEST(MannWhitney, IdenticalSamples) {
    const std::vector<double> a{1, 2, 2, 5};
    EXPECT_DOUBLE_EQ(mann_whitney_u(a, a).statistic, 8.0);
}

TEST(MannWhitney, Midranks) {
    const auto r = midranks(std::vector<double>{10, 20, 20, 30});
    EXPECT_EQ(r, (std::vector<double>{1, 2.5, 2.5, 4}));
}

TEST(MannWhitney, ExactMatchesBruteForceForAllPartitions) {
    // Every split of 1..8 into two groups of four.
    std::vector<bool> pick{false, false, false, false, true, true, true, true};
    do {
        std::vector<double> a, b;
        for (int i = 0; i < 8; ++i) (pick[static_cast<std::size_t>(i)] ? a : b).push_back(i + 1);
        const auto r = mann_whitney_u(a, b, MwuMode::exact);
        EXPECT_NEAR(r.p_value, brute_force_p(a, b), 1e-12);
    } while (std::next_permutation(pick.begin(), pick.end()));
}

TEST(MannWhitney, ExactWithTiesMatchesBruteForce) {
    const std::vector<double> a{1, 2, 2, 4, 4}, b{2, 3, 4, 5, 5, 6};
    EXPECT_NEAR(mann_whitney_u(a, b, MwuMode::exact).p_value, brute_force_p(a, b), 1e-12);
}

TEST(MannWhitney, ComplementIdentity) {
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<int> size(1, 12);
    std::uniform_int_distribution<int> val(0, 9);
    for (int k = 0; k < 500; ++k) {
        std::vector<double> a(static_cast<std::size_t>(size(gen))), b(static_cast<std::size_t>(size(gen)));
        for (auto& v : a) v = val(gen);
        for (auto& v : b) v = val(gen);
        EXPECT_DOUBLE_EQ(u_statistic(a, b) + u_statistic(b, a), static_cast<double>(a.size() * b.size()));
    }
}

TEST(MannWhitney, MonotoneTransformInvariant) {
    const std::vector<double> a{0.3, 1.2, 2.5, 0.9}, b{1.7, 3.1, 2.2, 4.0, 0.1};
    std::vector<double> ta, tb;
    for (double v : a) ta.push_back(std::exp(3 * v));
    for (double v : b) tb.push_back(std::exp(3 * v));
    EXPECT_DOUBLE_EQ(mann_whitney_u(a, b, MwuMode::exact).p_value, mann_whitney_u(ta, tb, MwuMode::exact).p_value);
}

TEST(MannWhitney, ExactAndApproxAgreeSmallSamples) {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> g;
    for (int k = 0; k < 50; ++k) {
        std::vector<double> a(6), b(6);
        for (auto& v : a) v = g(gen);
        for (auto& v : b) v = g(gen) + 0.8;
        const double pe = mann_whitney_u(a, b, MwuMode::exact).p_value;
        const double pa = mann_whitney_u(a, b, MwuMode::normal_approx).p_value;
        EXPECT_NEAR(pe, pa, 0.05);
    }
}

TEST(MannWhitney, EffectSize) {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    const auto r = mann_whitney_u(a, b, MwuMode::normal_approx);
    EXPECT_NEAR(r.effect_size, r.z * r.z / 6.0, 1e-12);
    // Uncorrected Z = (0 - 4.5) / sqrt(3 * 3 * 7 / 12).
    EXPECT_NEAR(std::abs(r.z), 4.5 / std::sqrt(5.25), 1e-12);
}

TEST(MannWhitney, OneSided) {
    const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    EXPECT_NEAR(mann_whitney_u(a, b, MwuMode::exact, Alternative::less).p_value, 0.05, 1e-12);
    EXPECT_NEAR(mann_whitney_u(a, b, MwuMode::exact, Alternative::greater).p_value, 1.0, 1e-12);
}

TEST(MannWhitney, Errors) {
    const std::vector<double> a{1, 2}, empty;
    EXPECT_THROW(mann_whitney_u(a, empty), posyn::ValidationError);
    std::vector<double> big(10, 1.0);
    EXPECT_THROW(mann_whitney_u(big, big, MwuMode::exact), posyn::ValidationError);
}

TEST(TTest, PooledHandValue) {
    const std::vector<double> a{0, 2}, b{1, 3};
    const auto r = independent_t(a, b);
    EXPECT_NEAR(r.statistic, -1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_EQ(r.df, 2.0);
    // Two-sided p of |t| = 1/sqrt(2) with 2 df: 1 - |t| / sqrt(2 + t^2).
    EXPECT_NEAR(r.p_value, 1.0 - (1.0 / std::sqrt(2.0)) / std::sqrt(2.5), 1e-12);
}

TEST(TTest, Symmetries) {
    const std::vector<double> a{1, 4, 2, 8}, b{3, 5, 9, 6, 7};
    const auto r = independent_t(a, a);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
    std::vector<double> na, nb;
    for (double v : a) na.push_back(-v);
    for (double v : b) nb.push_back(-v);
    const auto p = independent_t(a, b), q = independent_t(na, nb);
    EXPECT_NEAR(p.statistic, -q.statistic, 1e-12);
    EXPECT_NEAR(p.p_value, q.p_value, 1e-12);
}

TEST(TTest, Errors) {
    EXPECT_THROW(independent_t(std::vector<double>{1}, std::vector<double>{1, 2}), posyn::ValidationError);
    EXPECT_THROW(independent_t(std::vector<double>{1, 1}, std::vector<double>{2, 2}), posyn::ValidationError);
}
