#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "floodsignal/features.hpp"
#include "floodsignal/forest.hpp"
#include "floodsignal/labeler.hpp"

namespace floodsignal {

/// True/False rows as a dense dataset (True = positive).
Dataset to_dataset(std::span<const FeatureRow> rows);

/// k disjoint folds of row indices. Each class is shuffled under `seed` and
/// dealt round-robin, so per-class counts differ by at most one.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                                                       std::uint64_t seed);

struct RocPoint {
    double threshold;  // +inf for the origin point
    double true_positive_rate;
    double false_positive_rate;
};

struct RocCurve {
    std::vector<RocPoint> points;  // thresholds descending
    double auc = 0.0;
};

/// One point per distinct score (equal scores form one step) plus the
/// origin; AUC by the trapezoidal rule.
RocCurve roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PrecisionRecall {
    std::optional<double> precision;  // nullopt when nothing alerts
    double recall = 0.0;
    std::size_t alerts = 0;
    std::size_t true_positives = 0;
};

/// Alert set is {score >= t}.
PrecisionRecall pr_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double t);

/// Text form used in reports; undefined precision prints as "NA".
std::string format_precision(const std::optional<double>& precision);

struct FoldMetrics {
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    double auc = 0.0;  // NaN if the test fold is single-class
    PrecisionRecall pr;
};

struct CvReport {
    std::vector<FoldMetrics> folds;
    std::vector<double> scores;  // out-of-fold score per input row
    RocCurve pooled_roc;
    PrecisionRecall pooled;
    std::optional<double> mean_precision;  // over folds with alerts
    double mean_recall = 0.0;
};

CvReport cross_validate(const Dataset& data, const ForestParams& params, std::size_t k, std::uint64_t fold_seed);

enum class Outcome { Hit, Miss };
enum class HitRange { TrueRange, EventSpan };

HitRange parse_hit_range(std::string_view name);

struct EventResult {
    std::string event_id;
    Outcome outcome = Outcome::Miss;
    std::map<Day, double> per_day_scores;
    std::optional<std::string> external_forecast;
};

struct SkippedEvent {
    std::string event_id;
    std::string reason;
};

struct LooOptions {
    HitRange hit_range = HitRange::TrueRange;
};

struct LooReport {
    std::vector<EventResult> results;
    std::vector<SkippedEvent> skipped;
    double hit_rate = 0.0;
    std::size_t leakage_checks = 0;
};

class LeakageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Throws LeakageError if the two key sets intersect.
void assert_disjoint(const std::set<CellKey>& train, const std::set<CellKey>& test, const std::string& event_id);

/// Leave-one-event-out. For each event: drop training rows of its region
/// in [start-10, end+10], refit selection and forest, score the complete
/// rows of that region and window from `scoring_rows`. Hit iff a day in the
/// hit range scores >= threshold. Training and test keys are checked for
/// intersection on every iteration.
LooReport loo_events(std::span<const FeatureRow> training, std::span<const FeatureRow> scoring_rows,
                     std::span<const GroundTruthEvent> events, std::span<const LabelRange> ranges,
                     const ForestParams& params, const LooOptions& options = {});

}  // namespace floodsignal
