#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "fixtures.hpp"
#include "posyn/dsp.hpp"
#include "posyn/error.hpp"

using namespace posyn;
using namespace posyn::dsp;

namespace {

double rms(const std::vector<double>& x, std::size_t skip = 0) {
    double s = 0;
    for (std::size_t i = skip; i + skip < x.size(); ++i) s += x[i] * x[i];
    return std::sqrt(s / static_cast<double>(x.size() - 2 * skip));
}

std::vector<double> tone(double f, double rate, double seconds) {
    std::vector<double> x(static_cast<std::size_t>(seconds * rate));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / rate);
    return x;
}

}  // namespace

TEST(Bandpass, ZeroInZeroOut) {
    const std::vector<double> z(1000, 0.0);
    for (double v : bandpass(z, 2000.0, {})) EXPECT_EQ(v, 0.0);
}

TEST(Bandpass, TenHertzAttenuated) {
    const auto x = tone(10.0, 2000.0, 2.0);
    const auto y = bandpass(x, 2000.0, {});
    EXPECT_LT(rms(y, 400), 0.1 * rms(x, 400));
}

TEST(Bandpass, HundredHertzPasses) {
    const auto x = tone(100.0, 2000.0, 2.0);
    const auto y = bandpass(x, 2000.0, {});
    EXPECT_NEAR(rms(y, 200) / rms(x, 200), 1.0, 0.05);
}

TEST(Bandpass, MatchesSquaredDesignResponse) {
    // Forward-backward filtering applies |H|^2.
    const FilterSpec spec;
    const auto filter = butter_bandpass(spec.order, spec.band_low, spec.band_high, 2000.0);
    for (double f : {15.0, 40.0, 250.0, 400.0}) {
        const auto x = tone(f, 2000.0, 3.0);
        const auto y = bandpass(x, 2000.0, spec);
        const double h = filter.magnitude(f, 2000.0);
        EXPECT_NEAR(rms(y, 1000) / rms(x, 1000), h * h, 0.01) << f;
    }
}

TEST(Bandpass, NyquistViolation) {
    FilterSpec spec;
    EXPECT_THROW(bandpass(tone(10, 500, 1), 500.0, spec), ValidationError);
}

TEST(Bandpass, TooShort) {
    EXPECT_THROW(bandpass(std::vector<double>(5, 1.0), 2000.0, {}), ValidationError);
}

TEST(Demean, HandCases) {
    const auto a = demean(std::vector<double>{1, 2, 3});
    EXPECT_DOUBLE_EQ(a[0], -1);
    EXPECT_DOUBLE_EQ(a[1], 0);
    EXPECT_DOUBLE_EQ(a[2], 1);
    for (double v : demean(std::vector<double>(7, 5.0))) EXPECT_EQ(v, 0.0);
    const std::vector<double> z{-1, 0.5, 0.5};
    const auto b = demean(z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(b[i], z[i], 1e-12);
    EXPECT_THROW(demean(std::vector<double>{}), ValidationError);
}

TEST(Rectify, Definition) {
    const auto r = rectify(std::vector<double>{-1, 2, -3});
    EXPECT_EQ(r, (std::vector<double>{1, 2, 3}));
    const std::vector<double> pos{0, 1, 2.5};
    EXPECT_EQ(rectify(pos), pos);
}

TEST(Envelope, RectifiedSineMeanIsTwoOverPi) {
    const auto x = rectify(tone(150.0, 2000.0, 2.0));
    const auto e = envelope(x, 2000.0, {});
    const double mean = std::accumulate(e.begin() + 200, e.end() - 200, 0.0) / static_cast<double>(e.size() - 400);
    EXPECT_NEAR(mean / (2.0 / std::numbers::pi), 1.0, 0.02);
}

TEST(Envelope, ConstantPasses) {
    const auto e = envelope(std::vector<double>(2000, 0.7), 2000.0, {});
    for (std::size_t i = 100; i < e.size() - 100; ++i) EXPECT_NEAR(e[i], 0.7, 1e-6);
}

TEST(Envelope, NonNegative) {
    std::vector<double> x(4000, 0.0);
    x[2000] = 1.0;
    for (double v : envelope(x, 2000.0, {})) EXPECT_GE(v, 0.0);
}

TEST(Envelope, ZeroPhasePeak) {
    std::vector<double> x(4001, 0.0);
    for (int i = -40; i <= 40; ++i) x[static_cast<std::size_t>(2000 + i)] = 1.0 - std::abs(i) / 40.0;
    const auto e = envelope(x, 2000.0, {});
    const auto peak = std::max_element(e.begin(), e.end()) - e.begin();
    EXPECT_LE(std::abs(peak - 2000), 1);
}

TEST(Preprocess, ZeroAndPermutation) {
    UniformSeries raw;
    raw.rate = 2000.0;
    raw.values = Eigen::MatrixXd::Zero(14, 2000);
    const auto z = preprocess(raw, {});
    EXPECT_EQ(z.values.cwiseAbs().maxCoeff(), 0.0);

    std::mt19937_64 gen(4);
    raw.values = fixtures::random_nonnegative(14, 2000, gen).array() - 0.5;
    const auto a = preprocess(raw, {});
    UniformSeries swapped = raw;
    swapped.values.row(0).swap(swapped.values.row(5));
    const auto b = preprocess(swapped, {});
    EXPECT_TRUE(a.values.row(0) == b.values.row(5));
    EXPECT_TRUE(a.values.row(5) == b.values.row(0));
    EXPECT_GE(a.values.minCoeff(), 0.0);
    const auto again = preprocess(raw, {});
    EXPECT_TRUE(a.values == again.values);
}

TEST(Preprocess, RecoversSynthesizedEnvelope) {
    // Known envelope times a unit-RMS band-limited carrier.
    const double rate = 2000.0;
    const Index n = 6000;
    std::mt19937_64 gen(11);
    std::normal_distribution<double> g;
    std::vector<double> noise(static_cast<std::size_t>(n));
    for (auto& v : noise) v = g(gen);
    const auto carrier_f = butter_bandpass(4, 30.0, 250.0, rate);
    auto carrier = carrier_f.filtfilt(noise, 24);
    const double c_rms = rms(carrier);
    UniformSeries raw;
    raw.rate = rate;
    raw.values.resize(1, n);
    std::vector<double> truth(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        truth[static_cast<std::size_t>(i)] = 0.05 + std::exp(-std::pow((t - 1.5) / 0.2, 2)) +
                                             0.5 * std::exp(-std::pow((t - 2.2) / 0.1, 2));
        raw.values(0, i) = truth[static_cast<std::size_t>(i)] * carrier[static_cast<std::size_t>(i)] / c_rms;
    }
    const auto env = preprocess(raw, {});
    Eigen::VectorXd a(n), b(n);
    for (Index i = 0; i < n; ++i) {
        a(i) = env.values(0, i);
        b(i) = truth[static_cast<std::size_t>(i)];
    }
    a.array() -= a.mean();
    b.array() -= b.mean();
    EXPECT_GE(a.dot(b) / (a.norm() * b.norm()), 0.9);
}

TEST(FilterSpec, Checks) {
    FilterSpec s;
    EXPECT_NO_THROW(s.check(2000.0));
    s.order = 3;
    EXPECT_THROW(s.check(2000.0), ValidationError);
    s = {};
    s.band_low = 400;
    EXPECT_THROW(s.check(2000.0), ValidationError);
    s = {};
    EXPECT_THROW(s.check(90.0), ValidationError);
}
