#include "selftest.hpp"

#include <chrono>
#include <map>

#include "posyn/balance.hpp"
#include "posyn/io.hpp"
#include "posyn/rng.hpp"
#include "posyn/pipeline.hpp"
#include "posyn/simulator.hpp"

namespace posyn::tools {

namespace {

struct FieldEffect {
    double excursion[2] = {0, 0};
    double cop[2] = {0, 0};
};

// Identical perturbations with the field off [0] and on [1].
FieldEffect paired_field_trials(int trials) {
    sim::RigModel rig;
    sim::TaskParams task;
    rig.boundary = sim::build_boundary(sim::quiet_pelvic_points(rig, task, 10, 11), sim::Vec2::Zero());
    std::map<Direction, double> threshold;
    for (auto d : kDirections) threshold[d] = sim::calibrate_threshold(rig, d).force_n;
    FieldEffect e;
    Rng rng(13);
    for (int i = 0; i < trials; ++i) {
        sim::TrialScript script;
        script.direction = kDirections[static_cast<std::size_t>(i) % kDirections.size()];
        script.perturbation_force = threshold[script.direction];
        script.t_perturb_onset = rng.uniform(0.0, 0.8);
        script.seed = 500 + static_cast<std::uint64_t>(i);
        for (int f = 0; f < 2; ++f) {
            script.ff_enabled = f == 1;
            const auto r = sim::run_trial(rig, task, script);
            const auto trace = balance::trial_cop(r.recording, r.recording.t_vr_onset, r.recording.t_end);
            e.excursion[f] += r.diagnostics.max_pelvic_excursion_mm / trials;
            e.cop[f] += balance::cop_metrics(trace).total_excursion / trials;
        }
    }
    return e;
}

}  // namespace

bool run_selftest(std::ostream& out, bool quick) {
    const auto t0 = std::chrono::steady_clock::now();
    sim::CohortSpec spec;
    spec.seed = 7;
    spec.groups = {{Group::FF, quick ? 1 : 2, 4, true}, {Group::NoFF, quick ? 1 : 2, 8, false}};
    spec.sessions = quick ? 1 : 2;
    spec.trials_per_session = 40;
    const auto cohort = sim::generate_synthetic_cohort(spec);

    pipeline::PipelineConfig config;
    config.phases = pipeline::PhaseSelection::APR;
    config.synergy.restarts = quick ? 5 : 10;
    const auto a = pipeline::analyze(cohort.cohort, config);
    const auto b = pipeline::analyze(cohort.cohort, config);

    bool all = true;
    auto check = [&](const std::string& name, bool ok, const std::string& detail) {
        out << (ok ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
        all = all && ok;
    };

    for (const auto& truth : cohort.truth) {
        const pipeline::SynergyResult* found = nullptr;
        for (const auto& r : a.synergies) {
            if (r.group == truth.group) found = &r;
        }
        const std::string g(to_string(truth.group));
        if (!found) {
            check(g + " synergies extracted", false, "no result");
            continue;
        }
        check(g + " model order", found->selection.n_syn == truth.n_syn,
              "selected " + std::to_string(found->selection.n_syn) + ", generated " + std::to_string(truth.n_syn));
        if (found->selection.n_syn == truth.n_syn) {
            const auto m = synergy::match_synergies(found->selection.chosen.W, truth.W);
            double worst = 1.0;
            for (const auto& p : m.pairs) worst = std::min(worst, p.cosine);
            check(g + " W recovery", worst >= 0.95, "min cosine " + format_fixed(worst, 3));
        }
    }
    const auto field = paired_field_trials(quick ? 20 : 50);
    check("force field lowers pelvic excursion", field.excursion[1] < field.excursion[0],
          "on " + format_fixed(field.excursion[1], 1) + " mm, off " + format_fixed(field.excursion[0], 1) + " mm");
    check("force field lowers COP path", field.cop[1] < field.cop[0],
          "on " + format_fixed(field.cop[1], 1) + " mm, off " + format_fixed(field.cop[0], 1) + " mm");
    check("artifacts deterministic", a.artifacts == b.artifacts, std::to_string(a.artifacts.size()) + " files");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << (all ? "selftest passed" : "selftest FAILED") << " in " << format_fixed(secs, 1) << " s\n";
    return all;
}

}  // namespace posyn::tools
