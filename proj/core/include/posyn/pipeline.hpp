#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posyn/balance.hpp"
#include "posyn/binning.hpp"
#include "posyn/dsp.hpp"
#include "posyn/error.hpp"
#include "posyn/stats.hpp"
#include "posyn/synergy.hpp"
#include "posyn/types.hpp"

namespace posyn::pipeline {

namespace fs = std::filesystem;

/// Failure inside a pipeline stage; the message names the stage and, when
/// known, the trial.
class StageError : public Error {
public:
    StageError(std::string stage, std::string trial, const std::string& what);

    const std::string& stage() const { return stage_; }
    const std::string& trial() const { return trial_; }

private:
    std::string stage_;
    std::string trial_;
};

enum class PhaseSelection { APR, VPR, both };
enum class PoolMode { pooled, per_subject };

std::string_view to_string(PhaseSelection p);
std::string_view to_string(PoolMode p);
PhaseSelection parse_phase_selection(std::string_view s);
PoolMode parse_pool_mode(std::string_view s);

struct PipelineConfig {
    fs::path manifest;
    fs::path out_dir;
    dsp::FilterSpec filter;
    bool include_bk = true;
    binning::NormalizationScope normalization = binning::NormalizationScope::subject;
    PhaseSelection phases = PhaseSelection::both;
    PoolMode pool = PoolMode::pooled;
    synergy::SelectOptions synergy;
    double load_threshold = balance::kDefaultLoadThreshold;
    balance::RmsReference rms_reference = balance::RmsReference::mean;
    stats::MwuMode mwu_mode = stats::MwuMode::automatic;
    stats::Alternative alternative = stats::Alternative::two_sided;

    /// Canonical JSON of every option that affects results (the output
    /// directory is excluded).
    std::string canonical_json() const;
    /// FNV-1a 64 of canonical_json as 16 hex digits.
    std::string hash() const;
};

/// Overrides fields of `config` from a JSON object; unknown keys are errors.
void apply_config_json(PipelineConfig& config, const std::string& json_text);

/// Provenance line embedded in every artifact.
struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// Per-trial analysis products.
struct TrialAnalysis {
    std::size_t index = 0;  ///< into cohort.trials
    binning::TrialBins bins;
    std::optional<balance::CopMetrics> cop;
};

struct SynergyResult {
    std::string label;  ///< group name or subject id
    Group group = Group::FF;
    binning::Phase phase = binning::Phase::APR;
    binning::BinnedActivationMatrix matrix;
    synergy::Selection selection;
    std::vector<double> per_synergy_vaf;
    synergy::TuningCurves tuning;
};

struct MetricComparison {
    std::string metric;
    stats::TestResult mwu;
    std::optional<stats::TestResult> t_test;  ///< absent when undefined
};

struct PhaseMatching {
    binning::Phase phase = binning::Phase::APR;
    std::string label_a;
    std::string label_b;
    synergy::Matching matching;
};

struct PipelineResult {
    Cohort cohort;
    std::vector<TrialAnalysis> trials;
    std::vector<SynergyResult> synergies;
    std::vector<MetricComparison> comparisons;
    std::vector<PhaseMatching> matchings;
    /// File name -> content, written only after every stage succeeded.
    std::map<std::string, std::string> artifacts;
};

/// Bins every valid trial (resample, filter, envelope, window means).
std::vector<TrialAnalysis> preprocess_cohort(const Cohort& cohort, const PipelineConfig& config);

/// Net-COP sway metrics per trial over [VR onset, end].
void attach_cop_metrics(const Cohort& cohort, std::vector<TrialAnalysis>& trials, const PipelineConfig& config);

/// Matrices and synergy selection per group (pooled) or per subject.
std::vector<SynergyResult> extract_synergies(const Cohort& cohort, const std::vector<TrialAnalysis>& trials,
                                             const PipelineConfig& config);

/// Subject-level outcome and COP metrics used for group comparisons.
struct SubjectMetrics {
    std::string subject;
    Group group = Group::FF;
    std::map<std::string, double> values;
};
std::vector<SubjectMetrics> subject_metrics(const Cohort& cohort, const std::vector<TrialAnalysis>& trials);

/// Names of the subject-level metrics, in column order.
const std::vector<std::string>& subject_metric_names();

/// FF vs NoFF comparisons of every subject metric (both groups must have at
/// least one subject; metrics undefined for a test are skipped).
std::vector<MetricComparison> compare_groups(const std::vector<SubjectMetrics>& metrics,
                                             const PipelineConfig& config);

/// Stages to run after preprocessing; all on for a full report.
struct Stages {
    bool cop = true;
    bool synergies = true;
    bool stats = true;
};

/// Runs the full chain on a loaded cohort and renders all artifacts in
/// memory.
PipelineResult analyze(Cohort cohort, const PipelineConfig& config, const Stages& stages = {});

/// Loads the manifest, runs analyze and writes the artifacts to
/// config.out_dir. Nothing is written if any stage fails.
PipelineResult run_pipeline(const PipelineConfig& config, const Stages& stages = {});

/// Writes every artifact of a result into `dir`.
void write_artifacts(const PipelineResult& result, const fs::path& dir);

/// Comment or field carrying the provenance for each artifact type.
std::string csv_provenance(const Provenance& p);
std::string svg_provenance(const Provenance& p);

/// Reads a subject metrics CSV and compares two groups on one column.
MetricComparison compare_metric_csv(const fs::path& csv, const std::string& metric, Group a, Group b,
                                    stats::MwuMode mode = stats::MwuMode::automatic,
                                    stats::Alternative alternative = stats::Alternative::two_sided);

}  // namespace posyn::pipeline
