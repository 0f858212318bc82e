#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "posyn/io.hpp"
#include "posyn/pipeline.hpp"
#include "posyn/simulator.hpp"
#include "selftest.hpp"

namespace pl = posyn::pipeline;

namespace {

struct PipelineFlags {
    std::string config_file;
    std::string manifest;
    std::string out_dir;
    double band_low = 20.0;
    double band_high = 300.0;
    double envelope_cutoff = 50.0;
    int filter_order = 4;
    bool include_bk = true;
    std::string normalization = "subject";
    std::string phases = "both";
    std::string pool = "pooled";
    std::string n = "auto";
    double criterion = 90.0;
    std::uint64_t seed = 1;
    int restarts = 20;
    int max_iter = 5000;
    double tol = 1e-8;
    int n_max = 10;
    double load_threshold = 20.0;
    std::string rms_reference = "mean";
    std::string mwu_mode = "auto";
    std::string alternative = "two-sided";
};

void add_pipeline_flags(CLI::App* app, PipelineFlags& f, bool needs_out) {
    app->add_option("--config", f.config_file, "JSON config; flags given on the command line override it");
    app->add_option("--manifest", f.manifest, "cohort manifest JSON");
    auto* out = app->add_option("--out", f.out_dir, "output directory");
    if (needs_out) out->required();
    app->add_option("--band-low", f.band_low, "band-pass low corner, Hz")->capture_default_str();
    app->add_option("--band-high", f.band_high, "band-pass high corner, Hz")->capture_default_str();
    app->add_option("--envelope-cutoff", f.envelope_cutoff, "envelope low-pass cutoff, Hz")->capture_default_str();
    app->add_option("--filter-order", f.filter_order, "Butterworth order of each filter before zero-phase doubling")
        ->capture_default_str();
    app->add_option("--include-bk", f.include_bk, "keep the background bin in the APR and VPR matrices: true | false")
        ->capture_default_str();
    app->add_option("--normalization", f.normalization, "per-muscle maximum taken over: subject | session")
        ->capture_default_str();
    app->add_option("--phases", f.phases, "matrices to factorize: APR | VPR | both")->capture_default_str();
    app->add_option("--pool", f.pool, "pooled (one matrix per group) | per_subject")->capture_default_str();
    app->add_option("--n", f.n, "number of synergies: auto (VAF criterion) or a fixed K")->capture_default_str();
    app->add_option("--criterion", f.criterion, "VAF threshold in percent for automatic selection")
        ->capture_default_str();
    app->add_option("--seed", f.seed, "root seed of the factorization restarts")->capture_default_str();
    app->add_option("--restarts", f.restarts, "random restarts per model order")->capture_default_str();
    app->add_option("--max-iter", f.max_iter, "multiplicative-update iterations per restart")->capture_default_str();
    app->add_option("--tol", f.tol, "relative error change that stops a restart")->capture_default_str();
    app->add_option("--n-max", f.n_max, "largest model order scanned")->capture_default_str();
    app->add_option("--load-threshold", f.load_threshold, "vertical force below which a plate's COP is undefined, N")
        ->capture_default_str();
    app->add_option("--rms-reference", f.rms_reference, "RMS COP measured about: mean | start")
        ->capture_default_str();
    app->add_option("--mwu-mode", f.mwu_mode, "Mann-Whitney p value: auto | exact | normal")->capture_default_str();
    app->add_option("--alternative", f.alternative, "two-sided | less | greater")->capture_default_str();
}

bool given(const CLI::App* app, const char* name) { return app->count(name) > 0; }

pl::PipelineConfig build_config(const CLI::App* app, const PipelineFlags& f) {
    pl::PipelineConfig c;
    if (!f.config_file.empty()) pl::apply_config_json(c, posyn::read_text_file(f.config_file));
    const bool file = !f.config_file.empty();
    auto take = [&](const char* name) { return !file || given(app, name); };
    if (given(app, "--manifest")) c.manifest = f.manifest;
    if (given(app, "--out")) c.out_dir = f.out_dir;
    if (take("--band-low")) c.filter.band_low = f.band_low;
    if (take("--band-high")) c.filter.band_high = f.band_high;
    if (take("--envelope-cutoff")) c.filter.envelope_cutoff = f.envelope_cutoff;
    if (take("--filter-order")) c.filter.order = f.filter_order;
    if (take("--include-bk")) c.include_bk = f.include_bk;
    if (take("--normalization")) {
        c.normalization = f.normalization == "session" ? posyn::binning::NormalizationScope::session
                                                       : posyn::binning::NormalizationScope::subject;
        if (f.normalization != "session" && f.normalization != "subject") {
            throw posyn::ValidationError("unknown normalization '" + f.normalization + "'");
        }
    }
    if (take("--phases")) c.phases = pl::parse_phase_selection(f.phases);
    if (take("--pool")) c.pool = pl::parse_pool_mode(f.pool);
    if (take("--n")) c.synergy.fixed_n = f.n == "auto" ? 0 : std::stoi(f.n);
    if (take("--criterion")) c.synergy.criterion = f.criterion;
    if (take("--seed")) c.synergy.seed = f.seed;
    if (take("--restarts")) c.synergy.restarts = f.restarts;
    if (take("--max-iter")) c.synergy.max_iter = f.max_iter;
    if (take("--tol")) c.synergy.tol = f.tol;
    if (take("--n-max")) c.synergy.n_max = f.n_max;
    if (take("--load-threshold")) c.load_threshold = f.load_threshold;
    if (take("--rms-reference")) {
        if (f.rms_reference != "mean" && f.rms_reference != "start") {
            throw posyn::ValidationError("unknown RMS reference '" + f.rms_reference + "'");
        }
        c.rms_reference =
            f.rms_reference == "start" ? posyn::balance::RmsReference::start : posyn::balance::RmsReference::mean;
    }
    if (take("--mwu-mode")) c.mwu_mode = posyn::stats::parse_mwu_mode(f.mwu_mode);
    if (take("--alternative")) c.alternative = posyn::stats::parse_alternative(f.alternative);
    if (c.manifest.empty()) throw posyn::ValidationError("no manifest given (--manifest or config)");
    return c;
}

void print_written(const pl::PipelineResult& r, const pl::PipelineConfig& c) {
    std::cout << "wrote " << r.artifacts.size() << " files to " << c.out_dir.string() << " (config "
              << c.hash() << ")\n";
}

void print_test(const char* name, const posyn::stats::TestResult& r) {
    std::cout << name << ": statistic=" << posyn::format_exact(r.statistic)
              << " p=" << posyn::format_exact(r.p_value) << " effect=" << posyn::format_exact(r.effect_size)
              << " n1=" << r.n1 << " n2=" << r.n2;
    if (r.method == posyn::stats::Method::mann_whitney_u) std::cout << (r.exact ? " exact" : " normal-approx");
    std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"posyn: postural muscle synergy analysis and cable-robot balance simulation"};
    app.require_subcommand(1);

    std::string ingest_manifest;
    auto* ingest = app.add_subcommand("ingest", "load and validate a cohort manifest");
    ingest->add_option("--manifest", ingest_manifest, "cohort manifest JSON")->required();

    PipelineFlags pre_f, ext_f, cop_f, rep_f;
    auto* preprocess = app.add_subcommand("preprocess", "filter, envelope and bin every valid trial");
    add_pipeline_flags(preprocess, pre_f, true);
    auto* extract = app.add_subcommand("extract", "synergy extraction with VAF model-order selection");
    add_pipeline_flags(extract, ext_f, true);
    auto* cop = app.add_subcommand("cop", "net COP sway metrics per trial and subject");
    add_pipeline_flags(cop, cop_f, true);
    auto* report = app.add_subcommand("report", "full analysis: synergies, COP metrics, group statistics, plots");
    add_pipeline_flags(report, rep_f, true);

    auto* stats = app.add_subcommand("stats", "group comparisons");
    stats->require_subcommand(1);
    std::string metric, groups = "FF,NoFF", input, mode = "auto", alternative = "two-sided";
    auto* compare = stats->add_subcommand("compare", "Mann-Whitney U and t test on one subject metric");
    compare->add_option("--metric", metric, "column of the subject metrics CSV")->required();
    compare->add_option("--groups", groups, "two group labels, comma separated")->capture_default_str();
    compare->add_option("--input", input, "subject metrics CSV written by report or cop")->required();
    compare->add_option("--mwu-mode", mode, "auto | exact | normal")->capture_default_str();
    compare->add_option("--alternative", alternative, "two-sided | less | greater")->capture_default_str();

    auto* sim = app.add_subcommand("sim", "cable-robot protocol simulator");
    sim->require_subcommand(1);
    posyn::sim::BodyParams body;
    posyn::sim::CalibrationOptions cal;
    auto* calibrate = sim->add_subcommand("calibrate", "per-direction perturbation threshold of a body model");
    calibrate->add_option("--mass", body.mass, "kg")->capture_default_str();
    calibrate->add_option("--com-height", body.com_height, "m")->capture_default_str();
    calibrate->add_option("--support-ap", body.support_ap, "half-length of the support, m")->capture_default_str();
    calibrate->add_option("--support-ml", body.support_ml, "half-width of the support, m")->capture_default_str();
    calibrate->add_option("--damping", body.damping, "N s/m")->capture_default_str();
    calibrate->add_option("--response-rate", body.response_rate, "closed-loop natural frequency, rad/s")
        ->capture_default_str();
    calibrate->add_option("--pelvic-coupling", body.pelvic_coupling, "fraction of belt force acting on the COM")
        ->capture_default_str();
    calibrate->add_option("--start", cal.start_fraction, "first pulse, body-weight fraction")->capture_default_str();
    calibrate->add_option("--step", cal.step_fraction, "increment, body-weight fraction")->capture_default_str();
    calibrate->add_option("--cap", cal.cap_fraction, "largest pulse, body-weight fraction")->capture_default_str();
    calibrate->add_option("--pulse", cal.pulse_duration, "pulse duration, s")->capture_default_str();

    std::string scenario, sim_out;
    std::uint64_t sim_seed = 1;
    auto* run = sim->add_subcommand("run", "simulate a cohort and write it as a manifest with trial CSVs");
    run->add_option("--scenario", scenario, "scenario JSON (defaults used when omitted)");
    run->add_option("--out", sim_out, "output directory")->required();
    auto* seed_opt = run->add_option("--seed", sim_seed, "root seed; overrides the scenario's")->capture_default_str();

    bool quick = false;
    auto* selftest = app.add_subcommand("selftest", "closed-loop check on a simulated cohort");
    selftest->add_flag("--quick", quick, "smaller cohort");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const auto c = posyn::load_cohort(ingest_manifest);
            std::size_t valid = 0;
            for (const auto& t : c.trials) valid += t.valid ? 1 : 0;
            std::cout << c.subjects.size() << " subjects, " << c.trials.size() << " trials (" << valid
                      << " valid)\n";
            for (const auto& s : c.subjects) {
                std::cout << s.id << " " << posyn::to_string(s.group) << " " << posyn::to_string(s.handedness)
                          << "\n";
            }
        } else if (*preprocess || *extract || *cop || *report) {
            CLI::App* sub = *preprocess ? preprocess : *extract ? extract : *cop ? cop : report;
            const PipelineFlags& f = *preprocess ? pre_f : *extract ? ext_f : *cop ? cop_f : rep_f;
            const auto config = build_config(sub, f);
            pl::Stages stages;
            if (*preprocess) stages = {false, false, false};
            if (*extract) stages = {false, true, false};
            if (*cop) stages = {true, false, true};
            const auto r = pl::run_pipeline(config, stages);
            print_written(r, config);
            for (const auto& s : r.synergies) {
                std::cout << s.label << " " << posyn::binning::to_string(s.phase) << ": n_syn=" << s.selection.n_syn
                          << " VAF=" << posyn::format_fixed(s.selection.chosen.vaf_total, 2) << "\n";
            }
        } else if (*compare) {
            const auto comma = groups.find(',');
            if (comma == std::string::npos) throw posyn::ValidationError("--groups needs two labels, e.g. FF,NoFF");
            const auto a = posyn::parse_group(groups.substr(0, comma));
            const auto b = posyn::parse_group(groups.substr(comma + 1));
            const auto c = pl::compare_metric_csv(input, metric, a, b, posyn::stats::parse_mwu_mode(mode),
                                                  posyn::stats::parse_alternative(alternative));
            std::cout << metric << "\n";
            print_test("mann_whitney_u", c.mwu);
            if (c.t_test) print_test("independent_t", *c.t_test);
        } else if (*calibrate) {
            posyn::sim::RigModel rig;
            rig.body = body;
            std::cout << "direction,force_N,fraction_bw,pulses,flag\n";
            for (auto d : posyn::kDirections) {
                const auto r = posyn::sim::calibrate_threshold(rig, d, cal);
                std::cout << posyn::to_string(d) << "," << posyn::format_fixed(r.force_n, 2) << ","
                          << posyn::format_fixed(r.fraction, 2) << "," << r.pulses << ","
                          << (r.fell_at_start ? "fell_at_start" : r.never_fell ? "never_fell" : "") << "\n";
            }
        } else if (*run) {
            auto spec = scenario.empty() ? posyn::sim::CohortSpec{} : posyn::sim::load_scenario(scenario);
            if (*seed_opt || scenario.empty()) spec.seed = sim_seed;
            const auto cohort = posyn::sim::generate_synthetic_cohort(spec);
            const auto manifest = posyn::save_cohort(cohort.cohort, sim_out);
            posyn::write_text_file(std::filesystem::path(sim_out) / "ground_truth.json",
                                   posyn::sim::ground_truth_json(cohort));
            posyn::write_text_file(std::filesystem::path(sim_out) / "scenario.json",
                                   posyn::sim::scenario_json(spec));
            std::string diag = "subject,session,trial,ff,max_pelvic_excursion_mm,ff_active_s,stepped,cable_scale_min\n";
            for (std::size_t i = 0; i < cohort.cohort.trials.size(); ++i) {
                const auto& t = cohort.cohort.trials[i];
                const auto& d = cohort.diagnostics[i];
                diag += t.subject_id + "," + std::to_string(t.session) + "," + std::to_string(t.trial_id) + "," +
                        (t.group == posyn::Group::FF ? "1" : "0") + "," +
                        posyn::format_exact(d.max_pelvic_excursion_mm) + "," + posyn::format_exact(d.ff_active_time) +
                        "," + (d.stepped ? "1" : "0") + "," + posyn::format_exact(d.cable_scale_min) + "\n";
            }
            posyn::write_text_file(std::filesystem::path(sim_out) / "diagnostics.csv", diag);
            std::cout << "wrote " << cohort.cohort.trials.size() << " trials; manifest " << manifest.string() << "\n";
        } else if (*selftest) {
            return posyn::tools::run_selftest(std::cout, quick) ? 0 : 1;
        }
    } catch (const pl::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
