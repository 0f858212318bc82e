#include "posyn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "posyn/io.hpp"
#include "posyn/resample.hpp"
#include "posyn/svg.hpp"

namespace posyn::pipeline {

using nlohmann::json;

StageError::StageError(std::string stage, std::string trial, const std::string& what)
    : Error("stage '" + stage + "'" + (trial.empty() ? std::string() : " (trial " + trial + ")") + ": " + what),
      stage_(std::move(stage)),
      trial_(std::move(trial)) {}

std::string_view to_string(PhaseSelection p) {
    switch (p) {
        case PhaseSelection::APR: return "APR";
        case PhaseSelection::VPR: return "VPR";
        case PhaseSelection::both: return "both";
    }
    return "?";
}

std::string_view to_string(PoolMode p) { return p == PoolMode::pooled ? "pooled" : "per_subject"; }

PhaseSelection parse_phase_selection(std::string_view s) {
    if (s == "APR") return PhaseSelection::APR;
    if (s == "VPR") return PhaseSelection::VPR;
    if (s == "both") return PhaseSelection::both;
    throw ValidationError("unknown phase selection '" + std::string(s) + "' (APR, VPR, both)");
}

PoolMode parse_pool_mode(std::string_view s) {
    if (s == "pooled") return PoolMode::pooled;
    if (s == "per_subject" || s == "per-subject") return PoolMode::per_subject;
    throw ValidationError("unknown pool mode '" + std::string(s) + "' (pooled, per_subject)");
}

namespace {

std::string_view scope_name(binning::NormalizationScope s) {
    return s == binning::NormalizationScope::subject ? "subject" : "session";
}

binning::NormalizationScope parse_scope(std::string_view s) {
    if (s == "subject") return binning::NormalizationScope::subject;
    if (s == "session") return binning::NormalizationScope::session;
    throw ValidationError("unknown normalization scope '" + std::string(s) + "' (subject, session)");
}

std::string_view reference_name(balance::RmsReference r) {
    return r == balance::RmsReference::mean ? "mean" : "start";
}

balance::RmsReference parse_reference(std::string_view s) {
    if (s == "mean") return balance::RmsReference::mean;
    if (s == "start") return balance::RmsReference::start;
    throw ValidationError("unknown RMS reference '" + std::string(s) + "' (mean, start)");
}

std::string_view mwu_mode_name(stats::MwuMode m) {
    switch (m) {
        case stats::MwuMode::automatic: return "auto";
        case stats::MwuMode::exact: return "exact";
        case stats::MwuMode::normal_approx: return "normal";
    }
    return "?";
}

json config_object(const PipelineConfig& c) {
    json j;
    j["manifest"] = c.manifest.generic_string();
    j["filter"] = {{"band_low_hz", c.filter.band_low},
                   {"band_high_hz", c.filter.band_high},
                   {"envelope_cutoff_hz", c.filter.envelope_cutoff},
                   {"order", c.filter.order}};
    j["include_bk"] = c.include_bk;
    j["normalization"] = std::string(scope_name(c.normalization));
    j["phases"] = std::string(to_string(c.phases));
    j["pool"] = std::string(to_string(c.pool));
    j["synergy"] = {{"criterion", c.synergy.criterion},
                    {"seed", c.synergy.seed},
                    {"restarts", c.synergy.restarts},
                    {"max_iter", c.synergy.max_iter},
                    {"tol", c.synergy.tol},
                    {"n_max", c.synergy.n_max},
                    {"fixed_n", c.synergy.fixed_n}};
    j["load_threshold_N"] = c.load_threshold;
    j["rms_reference"] = std::string(reference_name(c.rms_reference));
    j["mwu_mode"] = std::string(mwu_mode_name(c.mwu_mode));
    j["alternative"] = std::string(stats::to_string(c.alternative));
    return j;
}

}  // namespace

std::string PipelineConfig::canonical_json() const { return config_object(*this).dump(); }

std::string PipelineConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void apply_config_json(PipelineConfig& config, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    auto fail = [](const std::string& key) { throw ValidationError("config: bad value for '" + key + "'"); };
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "manifest") {
                config.manifest = value.get<std::string>();
            } else if (key == "out_dir") {
                config.out_dir = value.get<std::string>();
            } else if (key == "filter") {
                for (const auto& [k, v] : value.items()) {
                    if (k == "band_low_hz") config.filter.band_low = v.get<double>();
                    else if (k == "band_high_hz") config.filter.band_high = v.get<double>();
                    else if (k == "envelope_cutoff_hz") config.filter.envelope_cutoff = v.get<double>();
                    else if (k == "order") config.filter.order = v.get<int>();
                    else throw ValidationError("config: unknown key filter." + k);
                }
            } else if (key == "include_bk") {
                config.include_bk = value.get<bool>();
            } else if (key == "normalization") {
                config.normalization = parse_scope(value.get<std::string>());
            } else if (key == "phases") {
                config.phases = parse_phase_selection(value.get<std::string>());
            } else if (key == "pool") {
                config.pool = parse_pool_mode(value.get<std::string>());
            } else if (key == "synergy") {
                for (const auto& [k, v] : value.items()) {
                    if (k == "criterion") config.synergy.criterion = v.get<double>();
                    else if (k == "seed") config.synergy.seed = v.get<std::uint64_t>();
                    else if (k == "restarts") config.synergy.restarts = v.get<int>();
                    else if (k == "max_iter") config.synergy.max_iter = v.get<int>();
                    else if (k == "tol") config.synergy.tol = v.get<double>();
                    else if (k == "n_max") config.synergy.n_max = v.get<int>();
                    else if (k == "fixed_n") config.synergy.fixed_n = v.get<int>();
                    else throw ValidationError("config: unknown key synergy." + k);
                }
            } else if (key == "load_threshold_N") {
                config.load_threshold = value.get<double>();
            } else if (key == "rms_reference") {
                config.rms_reference = parse_reference(value.get<std::string>());
            } else if (key == "mwu_mode") {
                config.mwu_mode = stats::parse_mwu_mode(value.get<std::string>());
            } else if (key == "alternative") {
                config.alternative = stats::parse_alternative(value.get<std::string>());
            } else {
                throw ValidationError("config: unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        fail(e.what());
    }
}

std::string csv_provenance(const Provenance& p) {
    return "# config_hash=" + p.config_hash + " seed=" + std::to_string(p.seed) + "\n";
}

std::string svg_provenance(const Provenance& p) {
    return "config_hash=" + p.config_hash + " seed=" + std::to_string(p.seed);
}

namespace {

std::string trial_label(const TrialRecording& t) {
    return t.subject_id + "/s" + std::to_string(t.session) + "/t" + std::to_string(t.trial_id);
}

}  // namespace

std::vector<TrialAnalysis> preprocess_cohort(const Cohort& cohort, const PipelineConfig& config) {
    std::vector<TrialAnalysis> out;
    for (std::size_t i = 0; i < cohort.trials.size(); ++i) {
        const auto& trial = cohort.trials[i];
        if (!trial.valid) continue;
        try {
            const auto grid = resample_to_grid(trial.emg, trial.rate_emg).series;
            const auto env = dsp::preprocess(grid, config.filter);
            TrialAnalysis a;
            a.index = i;
            a.bins = binning::bin_trial(env, trial.t_robust_onset, trial.t_end);
            out.push_back(std::move(a));
        } catch (const Error& e) {
            throw StageError("preprocess", trial_label(trial), e.what());
        }
    }
    return out;
}

void attach_cop_metrics(const Cohort& cohort, std::vector<TrialAnalysis>& trials, const PipelineConfig& config) {
    for (auto& a : trials) {
        const auto& trial = cohort.trials[a.index];
        try {
            const auto trace = balance::trial_cop(trial, trial.t_vr_onset, trial.t_end, config.load_threshold);
            a.cop = balance::cop_metrics(trace, config.rms_reference);
        } catch (const Error& e) {
            throw StageError("cop", trial_label(trial), e.what());
        }
    }
}

namespace {

std::vector<binning::Phase> selected_phases(PhaseSelection p) {
    switch (p) {
        case PhaseSelection::APR: return {binning::Phase::APR};
        case PhaseSelection::VPR: return {binning::Phase::VPR};
        case PhaseSelection::both: return {binning::Phase::APR, binning::Phase::VPR};
    }
    return {};
}

SynergyResult fit(const std::string& label, Group group, binning::Phase phase,
                  const std::vector<binning::NormalizedTrial>& trials, const PipelineConfig& config) {
    SynergyResult r;
    r.label = label;
    r.group = group;
    r.phase = phase;
    r.matrix = binning::assemble_matrix(trials, phase, config.include_bk);
    r.selection = synergy::select_n_syn(r.matrix.values, config.synergy);
    r.per_synergy_vaf = synergy::per_synergy_vaf(r.matrix.values, r.selection.chosen);
    r.tuning = synergy::tuning_curves(r.selection.chosen, r.matrix.columns);
    return r;
}

}  // namespace

std::vector<SynergyResult> extract_synergies(const Cohort& cohort, const std::vector<TrialAnalysis>& trials,
                                             const PipelineConfig& config) {
    if (trials.empty()) throw StageError("extract", "", "no valid trials to analyze");

    // Normalize each subject's trials separately, keeping cohort order.
    std::map<std::string, std::vector<binning::NormalizedTrial>> by_subject;
    for (const auto& subject : cohort.subjects) {
        std::vector<binning::TrialBins> bins;
        std::vector<Direction> dirs;
        std::vector<int> sessions;
        std::string first;
        for (const auto& a : trials) {
            const auto& t = cohort.trials[a.index];
            if (t.subject_id != subject.id) continue;
            if (first.empty()) first = trial_label(t);
            bins.push_back(a.bins);
            dirs.push_back(t.direction);
            sessions.push_back(t.session);
        }
        if (bins.empty()) continue;
        try {
            by_subject[subject.id] = binning::normalize_trials(bins, dirs, sessions, config.normalization);
        } catch (const Error& e) {
            throw StageError("normalize", first, e.what());
        }
    }

    std::vector<SynergyResult> out;
    const auto phases = selected_phases(config.phases);
    try {
        if (config.pool == PoolMode::pooled) {
            for (Group g : {Group::FF, Group::NoFF}) {
                std::vector<binning::NormalizedTrial> pool;
                for (const auto& subject : cohort.subjects) {
                    if (subject.group != g) continue;
                    auto it = by_subject.find(subject.id);
                    if (it == by_subject.end()) continue;
                    pool.insert(pool.end(), it->second.begin(), it->second.end());
                }
                if (pool.empty()) continue;
                for (auto phase : phases) out.push_back(fit(std::string(to_string(g)), g, phase, pool, config));
            }
        } else {
            for (const auto& subject : cohort.subjects) {
                auto it = by_subject.find(subject.id);
                if (it == by_subject.end()) continue;
                for (auto phase : phases) out.push_back(fit(subject.id, subject.group, phase, it->second, config));
            }
        }
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError("extract", "", e.what());
    }
    return out;
}

const std::vector<std::string>& subject_metric_names() {
    static const std::vector<std::string> names{
        "trials",          "catches",    "throws",           "mean_score", "total_excursion_mm", "session_excursion_mm",
        "rms_cop_mm",      "rms_cop_vel_mm_s", "max_ap_mm",  "max_ml_mm"};
    return names;
}

std::vector<SubjectMetrics> subject_metrics(const Cohort& cohort, const std::vector<TrialAnalysis>& trials) {
    std::vector<SubjectMetrics> out;
    for (const auto& subject : cohort.subjects) {
        SubjectMetrics m;
        m.subject = subject.id;
        m.group = subject.group;
        double count = 0, catches = 0, throws = 0, score = 0;
        for (const auto& t : cohort.trials) {
            if (t.subject_id != subject.id) continue;
            ++count;
            catches += t.outcome.caught ? 1 : 0;
            throws += t.outcome.thrown ? 1 : 0;
            score += t.outcome.score;
        }
        if (count == 0) continue;
        m.values["trials"] = count;
        m.values["catches"] = catches;
        m.values["throws"] = throws;
        m.values["mean_score"] = score / count;

        std::map<int, double> session_sum;
        std::array<double, 5> sums{};
        double n = 0;
        for (const auto& a : trials) {
            const auto& t = cohort.trials[a.index];
            if (t.subject_id != subject.id || !a.cop) continue;
            const auto& c = *a.cop;
            sums[0] += c.total_excursion;
            sums[1] += c.rms_cop;
            sums[2] += c.rms_cop_velocity;
            sums[3] += c.max_ap_displacement;
            sums[4] += c.max_ml_displacement;
            session_sum[t.session] += c.total_excursion;
            ++n;
        }
        if (n > 0) {
            m.values["total_excursion_mm"] = sums[0] / n;
            double s = 0;
            for (const auto& [session, v] : session_sum) s += v;
            m.values["session_excursion_mm"] = s / static_cast<double>(session_sum.size());
            m.values["rms_cop_mm"] = sums[1] / n;
            m.values["rms_cop_vel_mm_s"] = sums[2] / n;
            m.values["max_ap_mm"] = sums[3] / n;
            m.values["max_ml_mm"] = sums[4] / n;
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<MetricComparison> compare_groups(const std::vector<SubjectMetrics>& metrics,
                                             const PipelineConfig& config) {
    std::vector<MetricComparison> out;
    for (const auto& name : subject_metric_names()) {
        if (name == "trials") continue;
        std::vector<double> ff, noff;
        for (const auto& m : metrics) {
            auto it = m.values.find(name);
            if (it == m.values.end()) continue;
            (m.group == Group::FF ? ff : noff).push_back(it->second);
        }
        if (ff.empty() || noff.empty()) continue;
        MetricComparison c;
        c.metric = name;
        const auto mode = config.mwu_mode == stats::MwuMode::exact && ff.size() + noff.size() > stats::kExactLimit
                              ? stats::MwuMode::normal_approx
                              : config.mwu_mode;
        c.mwu = stats::mann_whitney_u(ff, noff, mode, config.alternative);
        try {
            c.t_test = stats::independent_t(ff, noff, config.alternative);
        } catch (const ValidationError&) {
            c.t_test.reset();
        }
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

std::string num(double v) { return format_exact(v); }

std::string safe_label(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string column_name(const binning::ColumnLabel& l) {
    return std::string(binning::to_string(l.bin)) + ":" + std::string(to_string(l.direction));
}

json test_json(const stats::TestResult& r) {
    json j{{"method", std::string(stats::to_string(r.method))},
           {"statistic", r.statistic},
           {"p_value", r.p_value},
           {"effect_size", r.effect_size},
           {"n1", r.n1},
           {"n2", r.n2}};
    if (r.method == stats::Method::mann_whitney_u) {
        j["z"] = r.z;
        j["exact"] = r.exact;
        j["effect_size_convention"] = "eta_squared = Z^2 / N, normal approximation without continuity correction";
    } else {
        j["df"] = r.df;
        j["effect_size_convention"] = "Cohen's d with pooled standard deviation";
    }
    return j;
}

void render(PipelineResult& result, const std::vector<SubjectMetrics>& metrics, const PipelineConfig& config,
            const Stages& stages) {
    const Provenance prov{config.hash(), config.synergy.seed};
    const std::string head = csv_provenance(prov);
    const std::string svg_note = svg_provenance(prov);
    const json prov_json{{"config_hash", prov.config_hash}, {"seed", prov.seed}};
    auto& files = result.artifacts;
    const auto& cohort = result.cohort;

    {
        json cfg = config_object(config);
        cfg["provenance"] = prov_json;
        files["config.json"] = cfg.dump(2) + "\n";
    }
    {
        std::string s = head + "subject,group,session,trial,direction,valid,caught,thrown,score\n";
        for (const auto& t : cohort.trials) {
            s += t.subject_id + "," + std::string(to_string(t.group)) + "," + std::to_string(t.session) + "," +
                 std::to_string(t.trial_id) + "," + std::string(to_string(t.direction)) + "," +
                 (t.valid ? "1" : "0") + "," + (t.outcome.caught ? "1" : "0") + "," +
                 (t.outcome.thrown ? "1" : "0") + "," + std::to_string(t.outcome.score) + "\n";
        }
        files["trials.csv"] = s;
    }
    {
        std::string s = head + "subject,session,trial,direction,channel";
        for (auto b : binning::kBins) s += "," + std::string(binning::to_string(b));
        s += ",vpr_valid,vpr3_clamped\n";
        const auto& ch = standard_channels();
        for (const auto& a : result.trials) {
            const auto& t = cohort.trials[a.index];
            for (Index c = 0; c < a.bins.means.rows(); ++c) {
                s += t.subject_id + "," + std::to_string(t.session) + "," + std::to_string(t.trial_id) + "," +
                     std::string(to_string(t.direction)) + "," + ch[static_cast<std::size_t>(c)].label();
                for (Index b = 0; b < a.bins.means.cols(); ++b) s += "," + num(a.bins.means(c, b));
                s += std::string(",") + (a.bins.vpr_valid[static_cast<std::size_t>(c)] ? "1" : "0") + "," +
                     (a.bins.vpr3_clamped[static_cast<std::size_t>(c)] ? "1" : "0") + "\n";
            }
        }
        files["trial_bins.csv"] = s;
    }
    if (stages.cop) {
        std::string s = head + "subject,group,trial,total_excursion_mm,rms_cop_mm,rms_cop_vel_mm_s,max_ap_mm,max_ml_mm\n";
        std::map<std::tuple<std::string, int>, double> session_sum;
        for (const auto& a : result.trials) {
            if (!a.cop) continue;
            const auto& t = cohort.trials[a.index];
            const auto& c = *a.cop;
            s += t.subject_id + "," + std::string(to_string(t.group)) + "," + std::to_string(t.trial_id) + "," +
                 num(c.total_excursion) + "," + num(c.rms_cop) + "," + num(c.rms_cop_velocity) + "," +
                 num(c.max_ap_displacement) + "," + num(c.max_ml_displacement) + "\n";
            session_sum[{t.subject_id, t.session}] += c.total_excursion;
        }
        files["cop_metrics.csv"] = s;
        std::string ss = head + "subject,group,session,total_excursion_mm\n";
        for (const auto& [key, v] : session_sum) {
            const auto& [subject, session] = key;
            ss += subject + "," + std::string(to_string(cohort.subject(subject).group)) + "," +
                  std::to_string(session) + "," + num(v) + "\n";
        }
        files["cop_session.csv"] = ss;
    }
    if (stages.stats) {
        std::string s = head + "subject,group";
        for (const auto& n : subject_metric_names()) s += "," + n;
        s += "\n";
        for (const auto& m : metrics) {
            s += m.subject + "," + std::string(to_string(m.group));
            for (const auto& n : subject_metric_names()) {
                auto it = m.values.find(n);
                s += "," + (it == m.values.end() ? std::string() : num(it->second));
            }
            s += "\n";
        }
        files["subject_metrics.csv"] = s;
    }
    if (stages.stats) {
        std::string s = head + "metric,test,statistic,p_value,effect_size,effect_convention,n1,n2\n";
        for (const auto& c : result.comparisons) {
            s += c.metric + ",mann_whitney_u," + num(c.mwu.statistic) + "," + num(c.mwu.p_value) + "," +
                 num(c.mwu.effect_size) + ",eta_squared_z2_over_n," + std::to_string(c.mwu.n1) + "," +
                 std::to_string(c.mwu.n2) + "\n";
            if (c.t_test) {
                s += c.metric + ",independent_t," + num(c.t_test->statistic) + "," + num(c.t_test->p_value) + "," +
                     num(c.t_test->effect_size) + ",cohens_d," + std::to_string(c.t_test->n1) + "," +
                     std::to_string(c.t_test->n2) + "\n";
            }
        }
        files["stats.csv"] = s;
    }

    json synergies = json::array();
    std::string long_bins = head + "subject,group,phase,muscle,side,bin,direction,value\n";
    for (const auto& r : result.synergies) {
        const std::string stem = safe_label(r.label) + "_" + std::string(binning::to_string(r.phase));
        const auto& set = r.selection.chosen;
        const auto& rows = r.matrix.rows;

        std::string w = head + "muscle";
        for (int i = 0; i < set.n_syn; ++i) w += ",W" + std::to_string(i + 1);
        w += "\n";
        for (Index m = 0; m < set.W.rows(); ++m) {
            w += static_cast<std::size_t>(m) < rows.size() ? rows[static_cast<std::size_t>(m)].label() : std::to_string(m);
            for (Index i = 0; i < set.W.cols(); ++i) w += "," + num(set.W(m, i));
            w += "\n";
        }
        files["W_" + stem + ".csv"] = w;

        std::string c = head + "bin,direction,trials";
        for (int i = 0; i < set.n_syn; ++i) c += ",C" + std::to_string(i + 1);
        c += "\n";
        for (std::size_t j = 0; j < r.matrix.columns.size(); ++j) {
            c += std::string(binning::to_string(r.matrix.columns[j].bin)) + "," +
                 std::string(to_string(r.matrix.columns[j].direction)) + "," +
                 std::to_string(r.matrix.trials_per_cell[j]);
            for (Index i = 0; i < set.C.rows(); ++i) c += "," + num(set.C(i, static_cast<Index>(j)));
            c += "\n";
        }
        files["C_" + stem + ".csv"] = c;

        std::string v = head + "n,vaf\n";
        for (std::size_t n = 0; n < r.selection.vaf_scan.size(); ++n) {
            v += std::to_string(n + 1) + "," + num(r.selection.vaf_scan[n]) + "\n";
        }
        files["vaf_" + stem + ".csv"] = v;

        for (std::size_t j = 0; j < r.matrix.columns.size(); ++j) {
            const auto& col = r.matrix.columns[j];
            for (Index m = 0; m < r.matrix.values.rows(); ++m) {
                const auto& ch = rows[static_cast<std::size_t>(m)];
                long_bins += r.label + "," + std::string(to_string(r.group)) + "," +
                             std::string(binning::to_string(r.phase)) + "," + std::string(to_string(ch.muscle)) + "," +
                             std::string(to_string(ch.side)) + "," + std::string(binning::to_string(col.bin)) + "," +
                             std::string(to_string(col.direction)) + "," +
                             num(r.matrix.values(m, static_cast<Index>(j))) + "\n";
            }
        }

        const std::string title = r.label + " " + std::string(binning::to_string(r.phase));
        files["synergies_" + stem + ".svg"] = svg::synergy_bars(set, rows, title + " synergies", svg_note);
        files["tuning_" + stem + ".svg"] = svg::tuning_grid(r.tuning, title + " tuning curves", svg_note);
        files["vaf_" + stem + ".svg"] =
            svg::vaf_scan(r.selection.vaf_scan, config.synergy.criterion, r.selection.n_syn, title + " VAF", svg_note);

        json cols = json::array();
        for (const auto& l : r.matrix.columns) cols.push_back(column_name(l));
        json muscles = json::array();
        for (const auto& row : rows) muscles.push_back(row.label());
        json one{{"provenance", prov_json},
                 {"label", r.label},
                 {"group", std::string(to_string(r.group))},
                 {"phase", std::string(binning::to_string(r.phase))},
                 {"n_syn", r.selection.n_syn},
                 {"criterion_met", r.selection.criterion_met},
                 {"vaf_total", set.vaf_total},
                 {"vaf_scan", r.selection.vaf_scan},
                 {"per_synergy_vaf", r.per_synergy_vaf},
                 {"monotonicity_violations", r.selection.monotonicity_violations},
                 {"rng_seed", set.rng_seed},
                 {"restarts", set.restarts},
                 {"iterations", set.iterations},
                 {"converged", set.converged},
                 {"muscles", muscles},
                 {"columns", cols},
                 {"trials_per_cell", r.matrix.trials_per_cell},
                 {"W", matrix_json(set.W)},
                 {"C", matrix_json(set.C)}};
        json per_muscle = json::array();
        for (const auto& v2 : set.vaf_per_muscle) per_muscle.push_back(v2 ? json(*v2) : json(nullptr));
        one["vaf_per_muscle"] = per_muscle;
        files["synergy_" + stem + ".json"] = one.dump(2) + "\n";

        synergies.push_back({{"label", r.label},
                             {"group", std::string(to_string(r.group))},
                             {"phase", std::string(binning::to_string(r.phase))},
                             {"n_syn", r.selection.n_syn},
                             {"criterion_met", r.selection.criterion_met},
                             {"vaf_total", set.vaf_total},
                             {"vaf_scan", r.selection.vaf_scan}});
    }

    if (stages.synergies) files["bins.csv"] = long_bins;

    json matchings = json::array();
    for (const auto& m : result.matchings) {
        const std::string name = "matching_" + std::string(binning::to_string(m.phase)) + ".csv";
        std::string s = head + "phase," + m.label_a + "," + m.label_b + ",cosine\n";
        for (const auto& p : m.matching.pairs) {
            s += std::string(binning::to_string(m.phase)) + ",W" + std::to_string(p.a + 1) + ",W" +
                 std::to_string(p.b + 1) + "," + num(p.cosine) + "\n";
        }
        for (int a : m.matching.unmatched_a) {
            s += std::string(binning::to_string(m.phase)) + ",W" + std::to_string(a + 1) + ",,\n";
        }
        for (int b : m.matching.unmatched_b) {
            s += std::string(binning::to_string(m.phase)) + ",,W" + std::to_string(b + 1) + ",\n";
        }
        files[name] = s;
        matchings.push_back({{"phase", std::string(binning::to_string(m.phase))},
                             {"a", m.label_a},
                             {"b", m.label_b},
                             {"pairs", m.matching.pairs.size()},
                             {"total_cosine", m.matching.total_cosine}});
    }

    if (stages.cop) {
        // First valid trial of each group as an example COP path.
        std::vector<svg::Trace> traces;
        for (Group g : {Group::FF, Group::NoFF}) {
            for (const auto& a : result.trials) {
                const auto& t = cohort.trials[a.index];
                if (t.group != g || !a.cop) continue;
                const auto trace = balance::trial_cop(t, t.t_vr_onset, t.t_end, config.load_threshold);
                svg::Trace tr;
                tr.label = std::string(to_string(g)) + " " + trial_label(t);
                for (std::size_t i = 0; i < trace.size(); ++i) {
                    if (!trace.valid[i]) continue;
                    tr.x.push_back(trace.x[i]);
                    tr.y.push_back(trace.y[i]);
                }
                traces.push_back(std::move(tr));
                break;
            }
        }
        if (!traces.empty()) files["cop_traces.svg"] = svg::cop_traces(traces, "Net COP", svg_note);
    }

    json comparisons = json::array();
    for (const auto& c : result.comparisons) {
        json j{{"metric", c.metric}, {"mann_whitney_u", test_json(c.mwu)}};
        if (c.t_test) j["independent_t"] = test_json(*c.t_test);
        comparisons.push_back(std::move(j));
    }
    std::size_t valid = 0;
    for (const auto& t : cohort.trials) valid += t.valid ? 1 : 0;
    json report{{"provenance", prov_json},
                {"config", config_object(config)},
                {"cohort", {{"subjects", cohort.subjects.size()}, {"trials", cohort.trials.size()}, {"valid_trials", valid}}},
                {"synergies", synergies},
                {"matchings", matchings},
                {"comparisons", comparisons}};
    if (stages.cop && stages.synergies && stages.stats) files["report.json"] = report.dump(2) + "\n";
}

}  // namespace

PipelineResult analyze(Cohort cohort, const PipelineConfig& config, const Stages& stages) {
    if (cohort.trials.empty()) throw StageError("ingest", "", "cohort has no trials");
    PipelineResult result;
    result.cohort = std::move(cohort);
    try {
        config.filter.check(result.cohort.trials.front().rate_emg);
    } catch (const Error& e) {
        throw StageError("config", "", e.what());
    }
    result.trials = preprocess_cohort(result.cohort, config);
    if (stages.cop) attach_cop_metrics(result.cohort, result.trials, config);
    if (stages.synergies) result.synergies = extract_synergies(result.cohort, result.trials, config);

    if (stages.synergies && config.pool == PoolMode::pooled) {
        for (auto phase : selected_phases(config.phases)) {
            const SynergyResult* ff = nullptr;
            const SynergyResult* noff = nullptr;
            for (const auto& r : result.synergies) {
                if (r.phase != phase) continue;
                (r.group == Group::FF ? ff : noff) = &r;
            }
            if (ff && noff) {
                result.matchings.push_back(
                    {phase, ff->label, noff->label, synergy::match_synergies(ff->selection.chosen, noff->selection.chosen)});
            }
        }
    }
    const auto metrics = subject_metrics(result.cohort, result.trials);
    if (stages.stats) {
        try {
            result.comparisons = compare_groups(metrics, config);
        } catch (const Error& e) {
            throw StageError("stats", "", e.what());
        }
    }
    render(result, metrics, config, stages);
    return result;
}

void write_artifacts(const PipelineResult& result, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StageError("write", "", "cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [name, content] : result.artifacts) {
        try {
            write_text_file(dir / name, content);
        } catch (const Error& e) {
            throw StageError("write", "", e.what());
        }
    }
}

PipelineResult run_pipeline(const PipelineConfig& config, const Stages& stages) {
    if (config.out_dir.empty()) throw StageError("config", "", "no output directory given");
    Cohort cohort;
    try {
        cohort = load_cohort(config.manifest);
    } catch (const Error& e) {
        throw StageError("ingest", "", e.what());
    }
    auto result = analyze(std::move(cohort), config, stages);
    write_artifacts(result, config.out_dir);
    return result;
}

MetricComparison compare_metric_csv(const fs::path& csv, const std::string& metric, Group a, Group b,
                                    stats::MwuMode mode, stats::Alternative alternative) {
    const auto rows = read_text_csv(csv);
    if (rows.empty()) throw ValidationError("compare: '" + csv.string() + "' is empty");
    const auto& header = rows.front();
    auto find = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ValidationError("compare: column '" + name + "' not found in " + csv.string());
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto gcol = find("group");
    const auto mcol = find(metric);
    std::vector<double> va, vb;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() <= std::max(gcol, mcol) || row[mcol].empty()) continue;
        const Group g = parse_group(row[gcol]);
        if (g == a) va.push_back(parse_double(row[mcol]));
        else if (g == b) vb.push_back(parse_double(row[mcol]));
    }
    MetricComparison c;
    c.metric = metric;
    if (mode == stats::MwuMode::exact && va.size() + vb.size() > stats::kExactLimit) mode = stats::MwuMode::normal_approx;
    c.mwu = stats::mann_whitney_u(va, vb, mode, alternative);
    try {
        c.t_test = stats::independent_t(va, vb, alternative);
    } catch (const ValidationError&) {
        c.t_test.reset();
    }
    return c;
}

}  // namespace posyn::pipeline
