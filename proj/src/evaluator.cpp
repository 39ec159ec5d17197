#include "floodsignal/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "floodsignal/random.hpp"

namespace floodsignal {

Dataset to_dataset(std::span<const FeatureRow> rows) {
    Dataset data(kFeatureCount);
    for (const auto& r : rows) {
        if (r.label != Label::True && r.label != Label::False)
            throw std::invalid_argument("dataset rows must be labeled True or False");
        data.add_row(r.values, r.label == Label::True);
    }
    return data;
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k-fold needs k >= 2");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] ? 1 : 0].push_back(i);
    for (const auto& c : by_class)
        if (c.size() < k) throw std::invalid_argument("each class needs at least k rows for stratified folds");

    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t next = 0;
    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.below(i))]);
        for (std::size_t i : idx) {
            folds[next].push_back(i);
            next = (next + 1) % k;
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

RocCurve roc_points(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
    double pos = 0, neg = 0;
    for (auto l : labels) (l ? pos : neg) += 1;
    if (pos == 0 || neg == 0) throw std::invalid_argument("ROC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back(RocPoint{std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        const auto& prev = roc.points.back();
        const double tpr = tp / pos, fpr = fp / neg;
        roc.auc += (fpr - prev.false_positive_rate) * (tpr + prev.true_positive_rate) / 2.0;
        roc.points.push_back(RocPoint{s, tpr, fpr});
    }
    return roc;
}

PrecisionRecall pr_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double t) {
    if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
    PrecisionRecall pr;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        positives += labels[i];
        if (classify(scores[i], t)) {
            ++pr.alerts;
            pr.true_positives += labels[i];
        }
    }
    if (positives == 0) throw std::invalid_argument("recall needs at least one positive label");
    if (pr.alerts > 0) pr.precision = double(pr.true_positives) / double(pr.alerts);
    pr.recall = double(pr.true_positives) / double(positives);
    return pr;
}

std::string format_precision(const std::optional<double>& precision) {
    return precision ? format_number(*precision) : "NA";
}

CvReport cross_validate(const Dataset& data, const ForestParams& params, std::size_t k, std::uint64_t fold_seed) {
    const auto folds = stratified_kfold(data.labels(), k, fold_seed);
    CvReport report;
    report.scores.assign(data.rows(), 0.0);
    double precision_sum = 0, recall_sum = 0;
    std::size_t precision_n = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        std::sort(train_idx.begin(), train_idx.end());
        const Dataset train = data.subset(train_idx);
        const Dataset test = data.subset(folds[f]);
        const Forest forest = fit_model(train, params);
        const auto scores = predict_batch(forest, test);
        for (std::size_t i = 0; i < folds[f].size(); ++i) report.scores[folds[f][i]] = scores[i];

        FoldMetrics m;
        m.train_rows = train.rows();
        m.test_rows = test.rows();
        const auto pos = test.positives();
        m.auc = (pos == 0 || pos == test.rows()) ? std::nan("") : roc_points(scores, test.labels()).auc;
        m.pr = pr_at_threshold(scores, test.labels(), params.threshold);
        if (m.pr.precision) {
            precision_sum += *m.pr.precision;
            ++precision_n;
        }
        recall_sum += m.pr.recall;
        report.folds.push_back(m);
    }
    report.pooled_roc = roc_points(report.scores, data.labels());
    report.pooled = pr_at_threshold(report.scores, data.labels(), params.threshold);
    if (precision_n > 0) report.mean_precision = precision_sum / double(precision_n);
    report.mean_recall = recall_sum / double(folds.size());
    return report;
}

HitRange parse_hit_range(std::string_view name) {
    if (name == "true_range") return HitRange::TrueRange;
    if (name == "event_span") return HitRange::EventSpan;
    throw std::invalid_argument("unknown hit range '" + std::string(name) + "'");
}

void assert_disjoint(const std::set<CellKey>& train, const std::set<CellKey>& test, const std::string& event_id) {
    for (const auto& key : test)
        if (train.contains(key))
            throw LeakageError("event " + event_id + ": test cell " + key.region_id + " " + format_day(key.day) +
                               " is also in the training set");
}

LooReport loo_events(std::span<const FeatureRow> training, std::span<const FeatureRow> scoring_rows,
                     std::span<const GroundTruthEvent> events, std::span<const LabelRange> ranges,
                     const ForestParams& params, const LooOptions& options) {
    for (const auto& r : training)
        if (r.label == Label::True && r.event_id.empty())
            throw std::invalid_argument("True row " + r.region_id + " " + format_day(r.day) + " has no event id");

    std::map<std::string, LabelRange> range_of;
    for (const auto& r : ranges) range_of.emplace(r.event_id, r);

    LooReport report;
    std::size_t hits = 0;
    for (const auto& e : events) {
        const auto range = range_of.find(e.event_id);
        if (range == range_of.end()) {
            report.skipped.push_back({e.event_id, "no labeled range (no valid day to locate a peak)"});
            continue;
        }
        const Day lo = e.start - kUndefinedBuffer;
        const Day hi = e.end + kUndefinedBuffer;
        auto in_window = [&](const FeatureRow& r) {
            return r.region_id == e.region_id && lo <= r.day && r.day <= hi;
        };

        std::vector<const FeatureRow*> test;
        for (const auto& r : scoring_rows)
            if (r.complete && in_window(r)) test.push_back(&r);
        if (test.empty()) {
            report.skipped.push_back({e.event_id, "every region-day in the test window is incomplete"});
            continue;
        }

        std::vector<FeatureRow> train_rows;
        std::set<CellKey> train_keys, test_keys;
        for (const auto& r : training) {
            if (in_window(r)) continue;
            train_rows.push_back(r);
            train_keys.insert(CellKey{r.region_id, r.day});
        }
        for (const auto* r : test) test_keys.insert(CellKey{r->region_id, r->day});
        assert_disjoint(train_keys, test_keys, e.event_id);
        ++report.leakage_checks;

        const Dataset train = to_dataset(train_rows);
        const auto pos = train.positives();
        if (pos == 0 || pos == train.rows()) {
            report.skipped.push_back({e.event_id, "training set is single-class after exclusion"});
            continue;
        }
        const Forest forest = fit_model(train, params);

        const Day hit_first = options.hit_range == HitRange::TrueRange ? range->second.begin : e.start;
        const Day hit_last = options.hit_range == HitRange::TrueRange ? range->second.end : e.end;
        EventResult result;
        result.event_id = e.event_id;
        for (const auto* r : test) {
            const double s = score_values(forest, r->values);
            result.per_day_scores[r->day] = s;
            if (hit_first <= r->day && r->day <= hit_last && classify(s, params.threshold))
                result.outcome = Outcome::Hit;
        }
        if (result.outcome == Outcome::Hit) ++hits;
        report.results.push_back(std::move(result));
    }
    if (!report.results.empty()) report.hit_rate = double(hits) / double(report.results.size());
    return report;
}

}  // namespace floodsignal
