#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "posyn/balance.hpp"
#include "posyn/error.hpp"

using namespace posyn;
using namespace posyn::balance;

namespace {

CopTrace path(const std::vector<double>& x, const std::vector<double>& y, double rate = 1000.0) {
    CopTrace t;
    for (std::size_t i = 0; i < x.size(); ++i) {
        t.t.push_back(static_cast<double>(i) / rate);
        t.x.push_back(x[i]);
        t.y.push_back(y[i]);
        t.valid.push_back(true);
        t.fz.push_back(400.0);
    }
    return t;
}

CopTrace circle(double r, int samples, double cx = 0.0, double cy = 0.0) {
    std::vector<double> x, y;
    for (int i = 0; i < samples; ++i) {
        const double a = 2.0 * std::numbers::pi * i / samples;
        x.push_back(cx + r * std::cos(a));
        y.push_back(cy + r * std::sin(a));
    }
    return path(x, y, samples);
}

CopTrace one_sample(double fz, double mx, double my) {
    const std::vector<double> t{0.0}, f{fz}, z{0.0}, x{mx}, yv{my};
    return cop_from_wrench(t, z, z, f, x, yv);
}

}  // namespace

TEST(CopFromWrench, Definition) {
    const auto a = one_sample(500, 0, 0);
    EXPECT_EQ(a.x[0], 0.0);
    EXPECT_EQ(a.y[0], 0.0);
    const auto b = one_sample(500, 50, -25);
    EXPECT_NEAR(b.x[0], 50.0, 1e-12);
    EXPECT_NEAR(b.y[0], 100.0, 1e-12);
}

TEST(CopFromWrench, Threshold) {
    const std::vector<double> t{0.0, 0.001}, f{2.0, 400.0}, z{0.0, 0.0};
    const auto c = cop_from_wrench(t, z, z, f, z, z, {}, 20.0);
    EXPECT_FALSE(c.valid[0]);
    EXPECT_TRUE(c.valid[1]);
    const std::vector<double> low{2.0, 3.0};
    EXPECT_THROW(cop_from_wrench(t, z, z, low, z, z, {}, 20.0), ValidationError);
}

TEST(CopFromWrench, Origin) {
    const std::vector<double> t{0.0}, f{500}, z{0.0};
    const auto c = cop_from_wrench(t, z, z, f, z, z, PlateOrigin{10.0, -150.0});
    EXPECT_EQ(c.x[0], 10.0);
    EXPECT_EQ(c.y[0], -150.0);
}

TEST(NetCop, WeightedMean) {
    auto l = path({-100}, {0});
    auto r = path({100}, {0});
    l.fz = {300};
    r.fz = {100};
    EXPECT_NEAR(net_cop(l, r).x[0], -50.0, 1e-12);
    r.fz = {300};
    EXPECT_NEAR(net_cop(l, r).x[0], 0.0, 1e-12);
    r.fz = {0};
    r.valid = {false};
    EXPECT_NEAR(net_cop(l, r).x[0], -100.0, 1e-12);
    l.valid = {false};
    EXPECT_THROW(net_cop(l, r), ValidationError);
    EXPECT_THROW(net_cop(path({1, 2}, {0, 0}), path({1}, {0})), ValidationError);
}

TEST(CopMetrics, Stationary) {
    const auto m = cop_metrics(path({3, 3, 3}, {4, 4, 4}));
    EXPECT_EQ(m.total_excursion, 0.0);
    EXPECT_EQ(m.rms_cop, 0.0);
    EXPECT_EQ(m.rms_cop_velocity, 0.0);
    EXPECT_EQ(m.max_ap_displacement, 0.0);
    EXPECT_EQ(m.max_ml_displacement, 0.0);
}

TEST(CopMetrics, SquarePerimeter) {
    const auto m = cop_metrics(path({0, 10, 10, 0, 0}, {0, 0, 10, 10, 0}));
    EXPECT_NEAR(m.total_excursion, 40.0, 1e-12);
}

TEST(CopMetrics, CircleRms) {
    const auto m = cop_metrics(circle(7.0, 2000));
    EXPECT_NEAR(m.rms_cop, 7.0, 1e-9);
    EXPECT_NEAR(m.total_excursion, 1999 * 14.0 * std::sin(std::numbers::pi / 2000), 1e-9);
    EXPECT_NEAR(m.max_ap_displacement, 7.0, 1e-9);
}

TEST(CopMetrics, TranslationAndReversal) {
    const auto a = circle(5.0, 500);
    const auto b = circle(5.0, 500, 120.0, -30.0);
    const auto ma = cop_metrics(a), mb = cop_metrics(b);
    EXPECT_NEAR(ma.rms_cop, mb.rms_cop, 1e-9);
    EXPECT_NEAR(ma.total_excursion, mb.total_excursion, 1e-9);
    EXPECT_NEAR(ma.rms_cop_velocity, mb.rms_cop_velocity, 1e-6);
    auto rx = a.x, ry = a.y;
    std::reverse(rx.begin(), rx.end());
    std::reverse(ry.begin(), ry.end());
    EXPECT_NEAR(cop_metrics(path(rx, ry, 500)).total_excursion, ma.total_excursion, 1e-9);
}

TEST(CopMetrics, RateDoublingStable) {
    auto smooth = [](double rate) {
        std::vector<double> x, y;
        for (int i = 0; i <= static_cast<int>(rate); ++i) {
            const double t = i / rate;
            x.push_back(10 * std::sin(2 * std::numbers::pi * 1.3 * t));
            y.push_back(6 * std::cos(2 * std::numbers::pi * 0.7 * t));
        }
        return cop_metrics(path(x, y, rate)).total_excursion;
    };
    EXPECT_NEAR(smooth(2000.0) / smooth(1000.0), 1.0, 0.02);
}

TEST(CopMetrics, VelocityAndReference) {
    const auto m = cop_metrics(path({0, 1, 2}, {0, 0, 0}, 1000.0));
    EXPECT_NEAR(m.rms_cop_velocity, 1000.0, 1e-9);
    const auto s = cop_metrics(path({0, 1, 2}, {0, 0, 0}), RmsReference::start);
    EXPECT_NEAR(s.rms_cop, std::sqrt(5.0 / 3.0), 1e-12);
}

TEST(CopMetrics, InvalidSamplesSkipped) {
    auto t = path({0, 100, 1, 2}, {0, 0, 0, 0});
    t.valid[1] = false;
    EXPECT_NEAR(cop_metrics(t).total_excursion, 1.0, 1e-12);
    t.valid = {true, false, false, false};
    EXPECT_THROW(cop_metrics(t), ValidationError);
}

TEST(TrialCop, SimulatedTrialStaysBetweenFeet) {
    const auto c = fixtures::tiny_cohort(4, 2, false);
    const auto& trial = c.cohort.trials.front();
    const auto cop = trial_cop(trial, trial.t_vr_onset, trial.t_end);
    EXPECT_GT(cop.valid_count(), 2000u);
    for (std::size_t i = 0; i < cop.size(); ++i) {
        EXPECT_LE(std::abs(cop.y[i]), 150.0 + 1e-6);
        EXPECT_LE(std::abs(cop.x[i]), 100.0 + 1e-6);
    }
}
