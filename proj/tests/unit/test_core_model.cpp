#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "posyn/error.hpp"
#include "posyn/io.hpp"
#include "posyn/resample.hpp"
#include "posyn/types.hpp"

using namespace posyn;

TEST(Channels, FourteenDistinctPairs) {
    const auto& ch = standard_channels();
    std::set<std::pair<int, int>> pairs;
    int dominant = 0;
    for (std::size_t i = 0; i < ch.size(); ++i) {
        EXPECT_EQ(ch[i].id, static_cast<int>(i));
        pairs.insert({static_cast<int>(ch[i].side), static_cast<int>(ch[i].muscle)});
        dominant += ch[i].side == Side::dominant ? 1 : 0;
    }
    EXPECT_EQ(pairs.size(), 14u);
    EXPECT_EQ(dominant, 7);
}

TEST(Directions, LeftRightMapByHandedness) {
    EXPECT_EQ(parse_direction("right", Handedness::right), Direction::dominant);
    EXPECT_EQ(parse_direction("left", Handedness::right), Direction::nondominant);
    EXPECT_EQ(parse_direction("right", Handedness::left), Direction::nondominant);
    EXPECT_EQ(parse_direction("left", Handedness::left), Direction::dominant);
    EXPECT_EQ(parse_direction("forward"), Direction::forward);
    EXPECT_THROW(parse_direction("up"), ValidationError);
}

TEST(Resample, ConstantStaysConstant) {
    SampledSeries s;
    s.t = {0.0, 0.013, 0.5, 0.77, 1.0};
    s.values = Eigen::MatrixXd::Constant(2, 5, 3.3);
    const auto r = resample_to_grid(s, 1000.0);
    EXPECT_FALSE(r.truncated);
    EXPECT_EQ(r.series.samples(), 1001);
    EXPECT_NEAR((r.series.values.array() - 3.3).abs().maxCoeff(), 0.0, 1e-15);
}

TEST(Resample, HandLinearInterpolation) {
    SampledSeries s;
    s.t = {0.0, 1.0};
    s.values.resize(1, 2);
    s.values << 0.0, 10.0;
    const auto r = resample_to_grid(s, 4.0);
    ASSERT_EQ(r.series.samples(), 5);
    const double expected[] = {0.0, 2.5, 5.0, 7.5, 10.0};
    for (Index i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(r.series.values(0, i), expected[i]);
}

TEST(Resample, AffineExact) {
    SampledSeries s;
    for (int i = 0; i < 200; ++i) s.t.push_back(0.1 + 0.00731 * i + 0.002 * std::sin(i));
    s.values.resize(1, 200);
    for (int i = 0; i < 200; ++i) s.values(0, i) = 4.0 - 2.5 * s.t[static_cast<std::size_t>(i)];
    const auto r = resample_to_grid(s, 1000.0);
    for (Index i = 0; i < r.series.samples(); ++i) {
        EXPECT_NEAR(r.series.values(0, i), 4.0 - 2.5 * r.series.time(i), 1e-9 * 4.0);
    }
}

TEST(Resample, TruncatesInsteadOfExtrapolating) {
    SampledSeries s;
    s.t = {0.0, 1.0};
    s.values = Eigen::MatrixXd::Zero(1, 2);
    const auto r = resample_to_grid(s, 4.0, 2.0);
    EXPECT_TRUE(r.truncated);
    EXPECT_LE(r.series.t_last(), 1.0);
}

TEST(Resample, Errors) {
    SampledSeries s;
    s.t = {0.0};
    s.values = Eigen::MatrixXd::Zero(1, 1);
    EXPECT_THROW(resample_to_grid(s, 10.0), ValidationError);
    s.t = {0.0, 0.5, 0.4};
    s.values = Eigen::MatrixXd::Zero(1, 3);
    EXPECT_THROW(resample_to_grid(s, 10.0), ValidationError);
}

TEST(Validate, OnsetWindow) {
    auto c = fixtures::tiny_cohort(4, 3, false);
    auto trial = c.cohort.trials.front();
    EXPECT_NO_THROW(validate(trial));
    trial.t_robust_onset = trial.t_vr_onset + 0.9;
    EXPECT_THROW(validate(trial), ValidationError);
}

TEST(Validate, ChannelCount) {
    auto c = fixtures::tiny_cohort(4, 3, false);
    auto trial = c.cohort.trials.front();
    trial.emg.values.conservativeResize(13, Eigen::NoChange);
    EXPECT_THROW(validate(trial), ValidationError);
}

TEST(Cohort, SaveLoadRoundTripIsBitwise) {
    const auto c = fixtures::tiny_cohort(4, 9);
    const auto dir = fixtures::scratch_dir("roundtrip");
    const auto manifest = save_cohort(c.cohort, dir);
    const auto back = load_cohort(manifest);
    ASSERT_EQ(back.trials.size(), c.cohort.trials.size());
    ASSERT_EQ(back.subjects.size(), c.cohort.subjects.size());
    for (std::size_t i = 0; i < back.trials.size(); ++i) {
        const auto& a = c.cohort.trials[i];
        const auto& b = back.trials[i];
        EXPECT_EQ(a.subject_id, b.subject_id);
        EXPECT_EQ(a.direction, b.direction);
        EXPECT_EQ(a.outcome, b.outcome);
        EXPECT_EQ(a.t_robust_onset, b.t_robust_onset);
        EXPECT_EQ(a.emg.t, b.emg.t);
        EXPECT_TRUE(a.emg.values == b.emg.values);
        for (int p = 0; p < kPlateCount; ++p) EXPECT_TRUE(a.plates[p].values == b.plates[p].values);
        EXPECT_TRUE(a.pelvic.values == b.pelvic.values);
    }
    for (std::size_t i = 0; i < back.subjects.size(); ++i) {
        EXPECT_EQ(back.subjects[i].body_weight_n, c.cohort.subjects[i].body_weight_n);
        EXPECT_EQ(back.subjects[i].thresholds_n, c.cohort.subjects[i].thresholds_n);
    }
}

TEST(Cohort, MinimalManifest) {
    auto c = fixtures::tiny_cohort(4, 5, false);
    c.cohort.subjects.resize(1);
    c.cohort.trials.resize(1);
    c.cohort.trials_per_session.reset();
    const auto dir = fixtures::scratch_dir("minimal");
    const auto back = load_cohort(save_cohort(c.cohort, dir));
    EXPECT_EQ(back.trials.size(), 1u);
}

TEST(Cohort, MissingFileIsIoError) {
    const auto c = fixtures::tiny_cohort(4, 5, false);
    const auto dir = fixtures::scratch_dir("missing");
    const auto manifest = save_cohort(c.cohort, dir);
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (e.path().extension() == ".csv") {
            std::filesystem::remove(e.path());
            break;
        }
    }
    EXPECT_THROW(load_cohort(manifest), IoError);
    EXPECT_THROW(load_cohort(dir / "nope.json"), IoError);
}

TEST(Cohort, SessionCountEnforced) {
    auto c = fixtures::tiny_cohort(4, 5, false);
    c.cohort.trials.pop_back();
    EXPECT_THROW(validate(c.cohort), ValidationError);
    c.cohort.allow_dropped = true;
    EXPECT_NO_THROW(validate(c.cohort));
}

TEST(Io, FormatExactRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456.789, 6.02214076e23}) {
        EXPECT_EQ(parse_double(format_exact(v)), v);
    }
    EXPECT_EQ(format_fixed(-0.0001, 2), "0.00");
}
