#include "floodsignal/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "floodsignal/random.hpp"
#include "parallel.hpp"

namespace floodsignal {

void Dataset::add_row(std::span<const double> values, bool positive) {
    if (values.size() != n_features_) throw std::invalid_argument("row width does not match dataset");
    values_.insert(values_.end(), values.begin(), values.end());
    labels_.push_back(positive ? 1 : 0);
}

std::vector<double> Dataset::column(std::size_t feature) const {
    std::vector<double> col(rows());
    for (std::size_t r = 0; r < rows(); ++r) col[r] = at(r, feature);
    return col;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out(n_features_);
    for (std::size_t r : rows) out.add_row(row(r), labels_[r] != 0);
    return out;
}

std::size_t ForestParams::effective_mtry() const {
    if (mtry != 0) return mtry;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(k_features)))));
}

void ForestParams::validate(std::size_t available_features) const {
    if (n_trees < 1) throw std::invalid_argument("forest.n_trees must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("forest.max_depth must be >= 1");
    if (k_features < 1 || k_features > available_features)
        throw std::invalid_argument("forest.k_features must be in [1, " + std::to_string(available_features) + "]");
    const auto m = effective_mtry();
    if (m < 1 || m > k_features) throw std::invalid_argument("forest.mtry must be in [1, k_features]");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("forest.threshold must be in (0, 1)");
}

double anova_f_score(std::span<const double> column, std::span<const std::uint8_t> labels) {
    if (column.size() != labels.size()) throw std::invalid_argument("column and labels differ in length");
    const std::size_t n = column.size();
    if (n < 3) throw std::invalid_argument("ANOVA needs at least three rows");
    double sum[2] = {0, 0};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        sum[labels[i] ? 1 : 0] += column[i];
        ++count[labels[i] ? 1 : 0];
    }
    if (count[0] == 0 || count[1] == 0) throw std::invalid_argument("ANOVA needs both classes");

    const bool constant = std::all_of(column.begin(), column.end(), [&](double v) { return v == column[0]; });
    if (constant) return 0.0;

    const double mean[2] = {sum[0] / double(count[0]), sum[1] / double(count[1])};
    const double grand = (sum[0] + sum[1]) / double(n);
    bool first_seen[2] = {false, false};
    double first_value[2] = {0, 0};
    bool group_constant[2] = {true, true};
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int g = labels[i] ? 1 : 0;
        const double dev = column[i] - mean[g];
        within += dev * dev;
        if (!first_seen[g]) {
            first_seen[g] = true;
            first_value[g] = column[i];
        } else if (column[i] != first_value[g]) {
            group_constant[g] = false;
        }
    }
    if (group_constant[0] && group_constant[1]) return kInfiniteF;

    double between = 0.0;
    for (int g = 0; g < 2; ++g) between += double(count[g]) * (mean[g] - grand) * (mean[g] - grand);
    if (between == 0.0) return 0.0;
    const double df_between = 1.0;  // G - 1
    const double df_within = double(n) - 2.0;
    const double f = (between / df_between) / (within / df_within);
    return std::min(f, kInfiniteF);
}

std::vector<double> f_scores(const Dataset& data) {
    std::vector<double> scores(data.features());
    const auto n = static_cast<std::ptrdiff_t>(data.features());
    detail::LoopErrors errors;
#pragma omp parallel for
    for (std::ptrdiff_t j = 0; j < n; ++j)
        errors.guard(j, [&] { scores[j] = anova_f_score(data.column(j), data.labels()); });
    errors.rethrow();
    return scores;
}

namespace serial {
std::vector<double> f_scores(const Dataset& data) {
    std::vector<double> scores(data.features());
    for (std::size_t j = 0; j < data.features(); ++j) scores[j] = anova_f_score(data.column(j), data.labels());
    return scores;
}
}  // namespace serial

std::vector<std::size_t> select_features(const Dataset& data, std::size_t k) {
    if (k > data.features()) throw std::invalid_argument("cannot select more features than the dataset has");
    const auto scores = f_scores(data);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].positive_fraction;
}

std::size_t Tree::depth() const {
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

namespace {

constexpr double kImpurityTolerance = 1e-12;

// n * gini for a node with `pos` positives out of `n`.
double weighted_gini(double pos, double n) {
    if (n <= 0) return 0.0;
    const double neg = n - pos;
    return n - (pos * pos + neg * neg) / n;
}

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;
};

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> sample,
                                std::span<const std::size_t> features) {
    const double n = static_cast<double>(sample.size());
    double pos = 0;
    for (std::size_t r : sample) pos += data.label(r);
    const double parent = weighted_gini(pos, n);

    std::optional<Split> best;
    double best_impurity = parent - kImpurityTolerance;
    std::vector<std::pair<double, std::uint8_t>> column(sample.size());
    for (std::size_t f : features) {
        for (std::size_t i = 0; i < sample.size(); ++i) column[i] = {data.at(sample[i], f), data.label(sample[i])};
        std::sort(column.begin(), column.end());
        double left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            left_n += 1;
            left_pos += column[i].second;
            const double lo = column[i].first;
            const double hi = column[i + 1].first;
            if (!(lo < hi)) continue;
            const double impurity = weighted_gini(left_pos, left_n) + weighted_gini(pos - left_pos, n - left_n);
            if (impurity < best_impurity) {
                double mid = lo + (hi - lo) / 2.0;
                if (!(mid < hi)) mid = lo;
                best = Split{f, mid, impurity};
                best_impurity = impurity - kImpurityTolerance;
            }
        }
    }
    return best;
}

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, std::span<const std::size_t> candidates, const ForestParams& params,
                std::uint64_t seed)
        : data_(data), candidates_(candidates.begin(), candidates.end()), params_(params), rng_(seed) {}

    Tree build(std::vector<std::size_t> sample) {
        grow(std::move(sample), 0);
        return std::move(tree_);
    }

private:
    std::int32_t grow(std::vector<std::size_t> sample, std::size_t depth) {
        const auto id = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        double pos = 0;
        for (std::size_t r : sample) pos += data_.label(r);
        const double fraction = sample.empty() ? 0.0 : pos / static_cast<double>(sample.size());
        tree_.nodes[id].positive_fraction = fraction;
        if (fraction == 0.0 || fraction == 1.0 || depth >= params_.max_depth) return id;

        const auto features = draw_features();
        const auto split = best_split(data_, sample, features);
        if (!split) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : sample) (data_.at(r, split->feature) <= split->threshold ? left : right).push_back(r);
        sample.clear();
        sample.shrink_to_fit();

        const auto l = grow(std::move(left), depth + 1);
        const auto r = grow(std::move(right), depth + 1);
        auto& node = tree_.nodes[id];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    std::vector<std::size_t> draw_features() {
        std::vector<std::size_t> pool = candidates_;
        const std::size_t m = std::min(params_.effective_mtry(), pool.size());
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng_.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(m);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    const Dataset& data_;
    std::vector<std::size_t> candidates_;
    const ForestParams& params_;
    Rng rng_;
    Tree tree_;
};

}  // namespace

Tree train_tree(const Dataset& data, std::span<const std::size_t> sample, std::span<const std::size_t> candidates,
                const ForestParams& params, std::uint64_t tree_seed) {
    if (sample.empty()) throw std::invalid_argument("cannot grow a tree on an empty sample");
    TreeBuilder builder(data, candidates, params, tree_seed);
    return builder.build(std::vector<std::size_t>(sample.begin(), sample.end()));
}

std::uint64_t tree_seed(std::uint64_t master, std::size_t tree_index) {
    return derive_seed(master, static_cast<std::uint64_t>(tree_index));
}

std::vector<std::size_t> bootstrap_sample(const Dataset& data, std::uint64_t rng_seed, bool balanced) {
    Rng rng(rng_seed);
    const std::size_t n = data.rows();
    std::vector<std::size_t> sample(n);
    if (!balanced) {
        for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
        return sample;
    }
    std::vector<std::size_t> by_class[2];
    for (std::size_t r = 0; r < n; ++r) by_class[data.label(r)].push_back(r);
    for (auto& s : sample) {
        const auto& pool = by_class[rng.below(2)];
        s = pool[static_cast<std::size_t>(rng.below(pool.size()))];
    }
    return sample;
}

bool Forest::operator==(const Forest& other) const {
    const auto& a = params;
    const auto& b = other.params;
    return trees == other.trees && selected_features == other.selected_features &&
           feature_order_digest == other.feature_order_digest && a.n_trees == b.n_trees &&
           a.max_depth == b.max_depth && a.k_features == b.k_features && a.effective_mtry() == b.effective_mtry() &&
           a.threshold == b.threshold && a.seed == b.seed && a.balanced_bootstrap == b.balanced_bootstrap;
}

namespace {

void check_training_input(const Dataset& data, const ForestParams& params, std::span<const std::size_t> selected) {
    params.validate(data.features());
    if (data.rows() == 0) throw std::invalid_argument("training set is empty");
    const auto pos = data.positives();
    if (pos == 0 || pos == data.rows()) throw std::invalid_argument("training set has a single class");
    if (selected.empty()) throw std::invalid_argument("no features selected");
    for (std::size_t f : selected)
        if (f >= data.features()) throw std::invalid_argument("selected feature out of range");
}

Forest empty_forest(const ForestParams& params, std::span<const std::size_t> selected) {
    Forest forest;
    forest.params = params;
    forest.selected_features.assign(selected.begin(), selected.end());
    forest.feature_order_digest = feature_order_digest();
    forest.trees.resize(params.n_trees);
    return forest;
}

Tree grow_member(const Dataset& data, const ForestParams& params, std::span<const std::size_t> selected,
                 std::size_t index) {
    const auto seed = tree_seed(params.seed, index);
    const auto sample = bootstrap_sample(data, derive_seed(seed, "bootstrap"), params.balanced_bootstrap);
    return train_tree(data, sample, selected, params, seed);
}

}  // namespace

Forest train_forest(const Dataset& data, const ForestParams& params, std::span<const std::size_t> selected) {
    check_training_input(data, params, selected);
    Forest forest = empty_forest(params, selected);
    const auto n = static_cast<std::ptrdiff_t>(params.n_trees);
    detail::LoopErrors errors;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t t = 0; t < n; ++t)
        errors.guard(t, [&] { forest.trees[t] = grow_member(data, params, selected, static_cast<std::size_t>(t)); });
    errors.rethrow();
    return forest;
}

Forest fit_model(const Dataset& data, const ForestParams& params) {
    params.validate(data.features());
    const auto selected = select_features(data, params.k_features);
    return train_forest(data, params, selected);
}

double score_values(const Forest& forest, std::span<const double> values) {
    double sum = 0.0;
    for (const auto& t : forest.trees) sum += t.predict(values);
    return sum / static_cast<double>(forest.trees.size());
}

double predict_proba(const Forest& forest, const FeatureRow& row) {
    if (forest.feature_order_digest != feature_order_digest())
        throw std::invalid_argument("model feature ordering " + forest.feature_order_digest +
                                    " does not match this build (" + feature_order_digest() + ")");
    if (!row.complete)
        throw std::invalid_argument("row " + row.region_id + " " + format_day(row.day) + " is incomplete");
    return score_values(forest, row.values);
}

std::vector<double> predict_batch(const Forest& forest, const Dataset& data) {
    std::vector<double> out(data.rows());
    const auto n = static_cast<std::ptrdiff_t>(data.rows());
#pragma omp parallel for
    for (std::ptrdiff_t r = 0; r < n; ++r) out[r] = score_values(forest, data.row(static_cast<std::size_t>(r)));
    return out;
}

namespace serial {

Forest train_forest(const Dataset& data, const ForestParams& params, std::span<const std::size_t> selected) {
    check_training_input(data, params, selected);
    Forest forest = empty_forest(params, selected);
    for (std::size_t t = 0; t < params.n_trees; ++t) forest.trees[t] = grow_member(data, params, selected, t);
    return forest;
}

std::vector<double> predict_batch(const Forest& forest, const Dataset& data) {
    std::vector<double> out(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) out[r] = score_values(forest, data.row(r));
    return out;
}

}  // namespace serial

}  // namespace floodsignal
