#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "floodsignal/evaluator.hpp"
#include "floodsignal/features.hpp"
#include "floodsignal/forest.hpp"
#include "floodsignal/labeler.hpp"
#include "floodsignal/synthgen.hpp"

namespace floodsignal {

namespace fs = std::filesystem;

/// A fatal error inside one pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error("stage " + stage + " failed: " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct InputPaths {
    fs::path postings;
    fs::path regions;
    fs::path baseline;  // optional; overrides regions.csv rates when set
    fs::path events;
    fs::path external;  // optional
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::optional<synth::SynthConfig> synth;
    InputPaths inputs;
    std::optional<DayRange> window;
    bool strict = false;
    NormalizationPolicy policy = NormalizationPolicy::Consistent;
    LabelOptions labeling;
    FilterOptions filter;
    ForestParams forest;
    bool forest_seed_explicit = false;
    std::size_t folds = 3;
    LooOptions loo;
    std::string digest = "none";  // FNV-1a of the canonical config text

    ArtifactHeader header() const;
    /// Seeds fanned out from the master seed.
    std::uint64_t forest_seed() const;
    std::uint64_t fold_seed() const;
    std::uint64_t synth_seed() const;
    ForestParams forest_params() const;

    /// Relative paths are resolved against `base_dir`.
    static PipelineConfig parse(const std::string& json_text, const fs::path& base_dir);
    static PipelineConfig load(const fs::path& path);
    void override_seed(std::uint64_t seed);
};

/// Reads forest params either from a full pipeline config ("forest" key)
/// or from a bare params object.
ForestParams load_forest_params(const fs::path& path);

struct IngestSummary {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t days = 0;
    std::size_t valid_days = 0;
    std::size_t bundles = 0;
};

/// Writes validity.csv and bundles.jsonl.
IngestSummary stage_ingest(const fs::path& postings, const fs::path& regions, const DayRange& window, bool strict,
                           const fs::path& out_dir, const ArtifactHeader& header);

struct FeaturizeSummary {
    std::size_t rows = 0;
    std::size_t complete_rows = 0;
    std::vector<std::string> skipped_regions;
};

/// Reads bundles.jsonl, writes features.csv and volumes.csv.
FeaturizeSummary stage_featurize(const fs::path& bundles, const fs::path& regions, const fs::path& baseline,
                                 NormalizationPolicy policy, const fs::path& out_dir, const ArtifactHeader& header);

struct LabelSummary {
    std::size_t rows = 0;
    std::size_t true_rows = 0;
    std::size_t false_rows = 0;
    std::size_t undefined_rows = 0;
    std::size_t training_rows = 0;
    std::size_t training_positives = 0;
    std::vector<std::string> excluded_events;
};

/// Writes labels.csv, ranges.csv, and (when `regions` is set) train.csv.
LabelSummary stage_label(const fs::path& features, const fs::path& events, const fs::path& volumes,
                         const fs::path& regions, const LabelOptions& labeling, const FilterOptions& filter,
                         const fs::path& out_dir, const ArtifactHeader& header);

/// Trains on every True/False row of `train` and writes the model file.
Forest stage_train(const fs::path& train, const ForestParams& params, const fs::path& model_out,
                   const ArtifactHeader& header);

/// Scores complete rows; writes day,region_id,score,alert.
std::size_t stage_predict(const fs::path& model, const fs::path& features, const fs::path& out,
                          const ArtifactHeader& header);

struct EvaluationSummary {
    CvReport cv;
    std::optional<LooReport> loo;
};

struct EvaluateInputs {
    fs::path train;     // labeled training rows
    fs::path labels;    // optional; overrides the label column and supplies event ids
    fs::path features;  // all rows, scored during leave-one-out
    fs::path events;    // optional; enables leave-one-out
    fs::path ranges;
    fs::path external;  // optional
};

/// Cross-validation (folds.csv, scores.csv, roc.csv, roc.svg) and, when
/// events are given, leave-one-out (loo_scores.csv, report.csv).
EvaluationSummary stage_evaluate(const EvaluateInputs& in, const ForestParams& params, std::size_t folds,
                                 std::uint64_t fold_seed, const LooOptions& loo, const fs::path& out_dir,
                                 const ArtifactHeader& header);

/// Leave-one-out only; writes loo_scores.csv, loo_results.csv, report.csv.
LooReport stage_loo(const EvaluateInputs& in, const ForestParams& params, const LooOptions& loo,
                    const fs::path& out_dir, const ArtifactHeader& header);

/// Re-renders report.csv from loo_results.csv; copies roc when given.
void stage_report(const fs::path& loo_results, const fs::path& events, const fs::path& roc_csv,
                  const fs::path& external, const fs::path& out_dir, const ArtifactHeader& header);

struct PipelineResult {
    IngestSummary ingest;
    FeaturizeSummary features;
    LabelSummary labels;
    EvaluationSummary evaluation;
};

/// synth? -> ingest -> featurize -> label -> train -> evaluate (CV and
/// leave-one-out) -> report, all into `out_dir`. A failing stage leaves a
/// STALE marker naming it and throws StageError.
PipelineResult run_pipeline(const PipelineConfig& config, const fs::path& out_dir);

void write_loo_results(std::ostream& out, const LooReport& report, const ArtifactHeader& header);
std::vector<EventResult> read_loo_results(const fs::path& path);
RocCurve read_roc_csv(const fs::path& path);

}  // namespace floodsignal
