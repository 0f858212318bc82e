#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "posyn/io.hpp"
#include "posyn/pipeline.hpp"
#include "posyn/svg.hpp"

using namespace posyn;
using namespace posyn::pipeline;

namespace {

struct Shared {
    sim::SyntheticCohort cohort;
    PipelineConfig config;
    PipelineResult result;
};

const Shared& shared() {
    static const Shared s = [] {
        Shared x;
        sim::CohortSpec spec;
        spec.seed = 31;
        spec.groups = {{Group::FF, 2, 4, true}, {Group::NoFF, 2, 8, false}};
        spec.sessions = 1;
        spec.trials_per_session = 24;
        spec.quiet_trials = 4;
        x.cohort = sim::generate_synthetic_cohort(spec);
        x.config.phases = PhaseSelection::APR;
        x.config.synergy.restarts = 4;
        x.result = analyze(x.cohort.cohort, x.config);
        return x;
    }();
    return s;
}

const SynergyResult& find(const PipelineResult& r, Group g) {
    for (const auto& s : r.synergies) {
        if (s.group == g) return s;
    }
    throw std::runtime_error("group not found");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Pipeline, RecoversPlantedSynergies) {
    const auto& s = shared();
    for (const auto& truth : s.cohort.truth) {
        const auto& r = find(s.result, truth.group);
        EXPECT_EQ(r.selection.n_syn, truth.n_syn) << to_string(truth.group);
        if (r.selection.n_syn != truth.n_syn) continue;
        const auto m = synergy::match_synergies(r.selection.chosen.W, truth.W);
        for (const auto& p : m.pairs) EXPECT_GE(p.cosine, 0.95) << to_string(truth.group);
    }
}

TEST(Pipeline, ArtifactsAndPanels) {
    const auto& s = shared();
    const auto& files = s.result.artifacts;
    for (const char* name : {"config.json", "trials.csv", "trial_bins.csv", "bins.csv", "cop_metrics.csv",
                             "subject_metrics.csv", "stats.csv", "report.json", "W_FF_APR.csv", "C_FF_APR.csv",
                             "vaf_FF_APR.csv", "synergies_NoFF_APR.svg", "tuning_NoFF_APR.svg", "vaf_NoFF_APR.svg",
                             "matching_APR.csv", "cop_traces.svg"}) {
        EXPECT_TRUE(files.count(name)) << name;
    }
    const auto& ff = find(s.result, Group::FF);
    EXPECT_EQ(svg::count_elements(files.at("synergies_FF_APR.svg"), "rect", "panel"), ff.selection.n_syn);
    EXPECT_EQ(svg::count_elements(files.at("tuning_FF_APR.svg"), "rect", "panel"), ff.selection.n_syn);
    EXPECT_EQ(svg::count_elements(files.at("vaf_FF_APR.svg"), "circle"), 10);
    for (const auto& [name, content] : files) {
        const bool json = name.size() > 5 && name.substr(name.size() - 5) == ".json";
        const std::string prov = json ? "\"config_hash\": \"" + s.config.hash() : "config_hash=" + s.config.hash();
        EXPECT_NE(content.find(prov), std::string::npos) << name;
    }
}

TEST(Pipeline, CopMetricsEveryValidTrial) {
    const auto& s = shared();
    for (const auto& t : s.result.trials) {
        if (s.cohort.cohort.trials[t.index].valid) EXPECT_TRUE(t.cop.has_value());
    }
}

TEST(Pipeline, Deterministic) {
    const auto& s = shared();
    const auto again = analyze(s.cohort.cohort, s.config);
    EXPECT_EQ(again.artifacts, s.result.artifacts);
}

TEST(Pipeline, StagesLimitArtifacts) {
    const auto& s = shared();
    const auto r = analyze(s.cohort.cohort, s.config, Stages{false, false, false});
    EXPECT_TRUE(r.synergies.empty());
    EXPECT_TRUE(r.artifacts.count("trial_bins.csv"));
    EXPECT_FALSE(r.artifacts.count("report.json"));
    EXPECT_FALSE(r.artifacts.count("bins.csv"));
    EXPECT_FALSE(r.artifacts.count("stats.csv"));
}

TEST(Pipeline, EmptyCohortWritesNothing) {
    const auto dir = fixtures::scratch_dir("pipeline_empty");
    Cohort empty;
    save_cohort(empty, dir / "in");
    PipelineConfig c;
    c.manifest = dir / "in" / "manifest.json";
    c.out_dir = dir / "out";
    EXPECT_THROW(run_pipeline(c), StageError);
    EXPECT_FALSE(fs::exists(c.out_dir));
}

TEST(Pipeline, FailingStageWritesNothing) {
    const auto dir = fixtures::scratch_dir("pipeline_fail");
    const auto c0 = fixtures::tiny_cohort(4, 3, false);
    const auto manifest = save_cohort(c0.cohort, dir / "in");
    PipelineConfig c;
    c.manifest = manifest;
    c.out_dir = dir / "out";
    c.filter.band_high = 5000.0;
    try {
        run_pipeline(c);
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "config");
    }
    EXPECT_FALSE(fs::exists(c.out_dir));
}

TEST(Pipeline, RunFromDiskMatchesInMemory) {
    const auto& s = shared();
    const auto dir = fixtures::scratch_dir("pipeline_disk");
    PipelineConfig c = s.config;
    c.manifest = save_cohort(s.cohort.cohort, dir / "in");
    c.out_dir = dir / "out";
    const auto r = run_pipeline(c, Stages{true, false, true});
    EXPECT_EQ(slurp(c.out_dir / "subject_metrics.csv"), r.artifacts.at("subject_metrics.csv"));
    const auto cmp = compare_metric_csv(c.out_dir / "subject_metrics.csv", "total_excursion_mm", Group::FF,
                                        Group::NoFF);
    EXPECT_EQ(cmp.mwu.n1, 2);
    EXPECT_EQ(cmp.mwu.n2, 2);
    EXPECT_THROW(compare_metric_csv(c.out_dir / "subject_metrics.csv", "nope", Group::FF, Group::NoFF),
                 ValidationError);
}

TEST(Config, HashTracksOptions) {
    PipelineConfig a;
    PipelineConfig b;
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    b.out_dir = "/elsewhere";
    EXPECT_EQ(a.hash(), b.hash());
    b.include_bk = false;
    EXPECT_NE(a.hash(), b.hash());
    PipelineConfig c;
    c.synergy.seed = 2;
    EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, JsonOverrides) {
    PipelineConfig c;
    apply_config_json(c, R"({"filter": {"order": 6}, "synergy": {"restarts": 3, "fixed_n": 5}, "pool": "per_subject",
                             "include_bk": false, "phases": "VPR"})");
    EXPECT_EQ(c.filter.order, 6);
    EXPECT_EQ(c.synergy.restarts, 3);
    EXPECT_EQ(c.synergy.fixed_n, 5);
    EXPECT_EQ(c.pool, PoolMode::per_subject);
    EXPECT_FALSE(c.include_bk);
    EXPECT_EQ(c.phases, PhaseSelection::VPR);
    EXPECT_THROW(apply_config_json(c, R"({"bogus": 1})"), ValidationError);
    EXPECT_THROW(apply_config_json(c, R"({"filter": {"bogus": 1}})"), ValidationError);
    EXPECT_THROW(apply_config_json(c, R"({"filter": {"order": "x"}})"), ValidationError);
    EXPECT_THROW(apply_config_json(c, "[1"), ValidationError);
    PipelineConfig d;
    apply_config_json(d, c.canonical_json());
    EXPECT_EQ(d.hash(), c.hash());
}

TEST(Config, Enums) {
    EXPECT_EQ(parse_phase_selection("both"), PhaseSelection::both);
    EXPECT_EQ(parse_pool_mode(to_string(PoolMode::per_subject)), PoolMode::per_subject);
    EXPECT_THROW(parse_phase_selection("all"), ValidationError);
}
