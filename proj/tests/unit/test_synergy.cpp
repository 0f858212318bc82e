#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "posyn/binning.hpp"
#include "posyn/error.hpp"
#include "posyn/simulator.hpp"
#include "posyn/synergy.hpp"

using namespace posyn;
using namespace posyn::synergy;

namespace {

NmfOptions quick(int n, std::uint64_t seed = 1) {
    NmfOptions o;
    o.n = n;
    o.seed = seed;
    o.restarts = 5;
    o.max_iter = 3000;
    return o;
}

double min_matched_cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const auto m = match_synergies(a, b);
    double worst = 1.0;
    for (const auto& p : m.pairs) worst = std::min(worst, p.cosine);
    return worst;
}

}  // namespace

TEST(Vaf, HandCases) {
    Eigen::MatrixXd v(2, 2), r(2, 2);
    v << 1, 0, 0, 1;
    r << 1, 0, 0, 0;
    EXPECT_DOUBLE_EQ(vaf(v, r), 50.0);
    EXPECT_DOUBLE_EQ(vaf(v, v), 100.0);
    EXPECT_DOUBLE_EQ(vaf(v, Eigen::MatrixXd::Zero(2, 2)), 0.0);
    EXPECT_LT(vaf(v, 3.0 * v), 0.0);
    EXPECT_THROW(vaf(Eigen::MatrixXd::Zero(2, 2), v), ValidationError);
    EXPECT_THROW(vaf(v, Eigen::MatrixXd::Zero(3, 2)), ValidationError);
}

TEST(Nmf, RankOne) {
    std::mt19937_64 gen(2);
    const Eigen::MatrixXd w = fixtures::random_nonnegative(14, 1, gen);
    const Eigen::MatrixXd c = fixtures::random_nonnegative(1, 16, gen);
    const auto s = nmf_factorize(w * c, quick(1));
    EXPECT_GE(s.vaf_total, 99.9);
    EXPECT_DOUBLE_EQ(s.W.maxCoeff(), 1.0);
}

TEST(Nmf, RecoversPlantedFactors) {
    std::mt19937_64 gen(7);
    const Eigen::MatrixXd W0 = fixtures::sparse_nonnegative(14, 4, gen);
    const Eigen::MatrixXd C0 = fixtures::sparse_nonnegative(4, 16, gen);
    const Eigen::MatrixXd V = W0 * C0;
    const auto s4 = nmf_factorize(V, quick(4));
    EXPECT_GE(s4.vaf_total, 99.0);
    EXPECT_GE(min_matched_cosine(s4.W, W0), 0.95);
    const auto s2 = nmf_factorize(V, quick(2));
    EXPECT_LT(s2.vaf_total, s4.vaf_total);
}

TEST(Nmf, InvariantsAndHistory) {
    std::mt19937_64 gen(9);
    const Eigen::MatrixXd V = fixtures::random_nonnegative(14, 16, gen);
    auto o = quick(3);
    o.record_history = true;
    const auto s = nmf_factorize(V, o);
    EXPECT_GE(s.W.minCoeff(), 0.0);
    EXPECT_GE(s.C.minCoeff(), 0.0);
    for (Index j = 0; j < s.W.cols(); ++j) EXPECT_DOUBLE_EQ(s.W.col(j).maxCoeff(), 1.0);
    ASSERT_GT(s.error_history.size(), 1u);
    for (std::size_t i = 1; i < s.error_history.size(); ++i) {
        EXPECT_LE(s.error_history[i], s.error_history[i - 1] + 1e-10) << i;
    }
    EXPECT_NEAR(s.error, (V - s.W * s.C).norm(), 1e-9);
    EXPECT_NEAR(s.vaf_total, vaf(V, s.W * s.C), 1e-9);
}

TEST(Nmf, Deterministic) {
    std::mt19937_64 gen(4);
    const Eigen::MatrixXd V = fixtures::random_nonnegative(14, 16, gen);
    const auto a = nmf_factorize(V, quick(3, 42));
    const auto b = nmf_factorize(V, quick(3, 42));
    EXPECT_TRUE(a.W == b.W);
    EXPECT_TRUE(a.C == b.C);
    EXPECT_EQ(a.vaf_total, b.vaf_total);
}

TEST(Nmf, Errors) {
    Eigen::MatrixXd V = Eigen::MatrixXd::Constant(3, 4, 0.5);
    EXPECT_THROW(nmf_factorize(V, quick(0)), ValidationError);
    EXPECT_THROW(nmf_factorize(V, quick(4)), ValidationError);
    V(1, 1) = -0.1;
    EXPECT_THROW(nmf_factorize(V, quick(1)), ValidationError);
    EXPECT_THROW(nmf_factorize(Eigen::MatrixXd::Zero(3, 4), quick(1)), ValidationError);
}

TEST(Nmf, ZeroRowHasUndefinedMuscleVaf) {
    std::mt19937_64 gen(5);
    Eigen::MatrixXd V = fixtures::random_nonnegative(14, 16, gen);
    V.row(6).setZero();
    const auto s = nmf_factorize(V, quick(3));
    EXPECT_FALSE(s.vaf_per_muscle[6].has_value());
    EXPECT_TRUE(s.vaf_per_muscle[0].has_value());
    EXPECT_NEAR(s.W.row(6).maxCoeff(), 0.0, 1e-6);
}

TEST(Select, RankOnePicksOne) {
    std::mt19937_64 gen(3);
    const Eigen::MatrixXd V = fixtures::random_nonnegative(14, 1, gen) * fixtures::random_nonnegative(1, 16, gen);
    SelectOptions o;
    o.restarts = 3;
    o.n_max = 4;
    const auto s = select_n_syn(V, o);
    EXPECT_EQ(s.n_syn, 1);
    EXPECT_TRUE(s.criterion_met);
    EXPECT_EQ(s.vaf_scan.size(), 4u);
}

TEST(Select, GroundTruthFourWithNoise) {
    const auto truth = sim::make_ground_truth(4, 14, 16, 21);
    std::mt19937_64 gen(21);
    std::normal_distribution<double> g(0.0, 0.05);
    Eigen::MatrixXd V = truth.W * truth.C;
    for (Index i = 0; i < V.size(); ++i) V(i) = std::max(0.0, V(i) * (1.0 + g(gen)));
    SelectOptions o;
    o.restarts = 10;
    const auto s = select_n_syn(V, o);
    EXPECT_EQ(s.n_syn, 4);
    EXPECT_EQ(s.vaf_scan.size(), 10u);
    EXPECT_TRUE(s.monotonicity_violations.empty());
}

TEST(Select, NoOrderQualifies) {
    std::mt19937_64 gen(8);
    const Eigen::MatrixXd V = fixtures::random_nonnegative(6, 6, gen);
    SelectOptions o;
    o.restarts = 2;
    o.criterion = 100.5;
    const auto s = select_n_syn(V, o);
    EXPECT_FALSE(s.criterion_met);
    EXPECT_EQ(s.n_syn, 6);
}

TEST(Select, FixedOrder) {
    std::mt19937_64 gen(8);
    const Eigen::MatrixXd V = fixtures::random_nonnegative(14, 16, gen);
    SelectOptions o;
    o.restarts = 2;
    o.n_max = 5;
    o.fixed_n = 3;
    EXPECT_EQ(select_n_syn(V, o).chosen.n_syn, 3);
    o.fixed_n = 6;
    EXPECT_THROW(select_n_syn(V, o), ValidationError);
}

TEST(PerSynergyVaf, SingleComponentEqualsTotal) {
    std::mt19937_64 gen(6);
    const Eigen::MatrixXd V = fixtures::random_nonnegative(14, 16, gen);
    const auto s = nmf_factorize(V, quick(1));
    const auto p = per_synergy_vaf(V, s);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NEAR(p[0], s.vaf_total, 1e-9);
}

TEST(PerSynergyVaf, DisjointSupportAdds) {
    SynergySet s;
    s.W = Eigen::MatrixXd::Zero(4, 2);
    s.W(0, 0) = 1.0;
    s.W(1, 0) = 0.5;
    s.W(2, 1) = 1.0;
    s.W(3, 1) = 0.3;
    s.C = Eigen::MatrixXd::Zero(2, 4);
    s.C(0, 0) = 2.0;
    s.C(0, 1) = 1.0;
    s.C(1, 2) = 1.5;
    s.C(1, 3) = 0.7;
    Eigen::MatrixXd V = s.W * s.C;
    V(0, 3) += 0.2;
    const auto p = per_synergy_vaf(V, s);
    EXPECT_NEAR(p[0] + p[1], vaf(V, s.W * s.C), 1e-9);

    SynergySet swapped = s;
    swapped.W.col(0).swap(swapped.W.col(1));
    swapped.C.row(0).swap(swapped.C.row(1));
    const auto q = per_synergy_vaf(V, swapped);
    EXPECT_DOUBLE_EQ(q[0], p[1]);
    EXPECT_DOUBLE_EQ(q[1], p[0]);
    const auto inc = per_synergy_vaf(V, s, PerSynergyVaf::incremental);
    EXPECT_NEAR(inc[0] + inc[1], vaf(V, s.W * s.C), 1e-9);
}

TEST(Tuning, ReshapeAndRoundTrip) {
    std::mt19937_64 gen(1);
    SynergySet s;
    s.W = fixtures::random_nonnegative(14, 2, gen);
    s.C = fixtures::random_nonnegative(2, 16, gen);
    const auto labels = binning::phase_columns(binning::Phase::APR, true);
    const auto t = tuning_curves(s, labels);
    ASSERT_EQ(t.curves.size(), 2u);
    EXPECT_EQ(t.curves[0].rows(), 4);
    EXPECT_EQ(t.curves[0].cols(), 4);
    EXPECT_TRUE(flatten(t, labels) == s.C);
    const auto it = std::find(labels.begin(), labels.end(),
                              binning::ColumnLabel{binning::Bin::APR1, Direction::forward});
    const auto col = static_cast<Index>(it - labels.begin());
    const auto b = std::find(t.bins.begin(), t.bins.end(), binning::Bin::APR1) - t.bins.begin();
    const auto d = std::find(t.directions.begin(), t.directions.end(), Direction::forward) - t.directions.begin();
    EXPECT_EQ(t.curves[1](b, d), s.C(1, col));
    EXPECT_THROW(tuning_curves(s, std::vector<binning::ColumnLabel>(labels.begin(), labels.end() - 1)),
                 ValidationError);
}

TEST(Match, PermutationRecovered) {
    std::mt19937_64 gen(12);
    const Eigen::MatrixXd A = fixtures::random_nonnegative(14, 5, gen);
    const std::vector<int> perm{3, 0, 4, 1, 2};
    Eigen::MatrixXd B(14, 5);
    for (int i = 0; i < 5; ++i) B.col(perm[static_cast<std::size_t>(i)]) = A.col(i);
    const auto m = match_synergies(A, B);
    ASSERT_EQ(m.pairs.size(), 5u);
    for (const auto& p : m.pairs) {
        EXPECT_EQ(p.b, perm[static_cast<std::size_t>(p.a)]);
        EXPECT_NEAR(p.cosine, 1.0, 1e-12);
    }
    const auto self = match_synergies(A, A);
    for (const auto& p : self.pairs) EXPECT_EQ(p.a, p.b);
}

TEST(Match, OrthogonalColumn) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 2);
    A(0, 0) = 1;
    A(1, 0) = 1;
    A(2, 1) = 1;
    Eigen::MatrixXd B = A;
    B.col(1).setZero();
    B(3, 1) = 1;
    const auto m = match_synergies(A, B);
    for (const auto& p : m.pairs) EXPECT_NEAR(p.cosine, p.a == 0 ? 1.0 : 0.0, 1e-12);
}

TEST(Match, UnequalSizes) {
    std::mt19937_64 gen(13);
    const Eigen::MatrixXd A = fixtures::random_nonnegative(14, 4, gen);
    const Eigen::MatrixXd B = fixtures::random_nonnegative(14, 7, gen);
    const auto m = match_synergies(A, B);
    EXPECT_EQ(m.pairs.size(), 4u);
    EXPECT_EQ(m.unmatched_b.size(), 3u);
    EXPECT_TRUE(m.unmatched_a.empty());
    EXPECT_THROW(match_synergies(A, Eigen::MatrixXd::Ones(13, 2)), ValidationError);
}
