#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodsignal/features.hpp"
#include "floodsignal/table_io.hpp"

namespace floodsignal {

/// Dense row-major design matrix with binary labels.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::size_t n_features) : n_features_(n_features) {}

    void add_row(std::span<const double> values, bool positive);

    std::size_t rows() const { return labels_.size(); }
    std::size_t features() const { return n_features_; }
    double at(std::size_t row, std::size_t feature) const { return values_[row * n_features_ + feature]; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * n_features_, n_features_}; }
    std::uint8_t label(std::size_t r) const { return labels_[r]; }
    std::span<const std::uint8_t> labels() const { return labels_; }
    std::vector<double> column(std::size_t feature) const;
    std::size_t positives() const;

    Dataset subset(std::span<const std::size_t> rows) const;

private:
    std::size_t n_features_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> labels_;
};

struct ForestParams {
    std::size_t n_trees = 1000;
    std::size_t max_depth = 2;
    std::size_t k_features = 40;
    std::size_t mtry = 0;  // 0 selects floor(sqrt(k_features))
    double threshold = 0.2;
    std::uint64_t seed = 0;
    bool balanced_bootstrap = false;

    std::size_t effective_mtry() const;
    /// Throws std::invalid_argument naming the offending field.
    void validate(std::size_t available_features = kFeatureCount) const;
};

/// Stand-in for an infinite F score; keeps the ordering total.
inline constexpr double kInfiniteF = std::numeric_limits<double>::max();

/// Two-group one-way ANOVA F statistic. Constant column -> 0; zero
/// within-group variance with a non-constant column -> kInfiniteF.
/// Throws std::invalid_argument if a class is missing or N < 3.
double anova_f_score(std::span<const double> column, std::span<const std::uint8_t> labels);

std::vector<double> f_scores(const Dataset& data);

/// Indices of the k largest F scores (ties to the lower index), ascending.
std::vector<std::size_t> select_features(const Dataset& data, std::size_t k);

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when value <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double positive_fraction = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
    std::size_t depth() const;
    bool operator==(const Tree&) const = default;
};

/// Grows one tree on `sample` (row indices into data, repeats allowed).
/// Splits minimize weighted Gini over mtry features drawn from
/// `candidates` with the tree's own stream; thresholds are midpoints of
/// consecutive distinct values. Ties go to the lower feature index, then
/// the lower threshold.
Tree train_tree(const Dataset& data, std::span<const std::size_t> sample, std::span<const std::size_t> candidates,
                const ForestParams& params, std::uint64_t tree_seed);

/// Per-tree seed: derive_seed(params.seed, tree_index).
std::uint64_t tree_seed(std::uint64_t master, std::size_t tree_index);

/// Bootstrap rows for one tree, drawn from `rng_seed`'s stream.
std::vector<std::size_t> bootstrap_sample(const Dataset& data, std::uint64_t rng_seed, bool balanced);

struct Forest {
    std::vector<Tree> trees;
    std::vector<std::size_t> selected_features;
    ForestParams params;
    std::string feature_order_digest;

    bool operator==(const Forest& other) const;
};

/// Trees are trained in parallel; the result does not depend on the thread count.
Forest train_forest(const Dataset& data, const ForestParams& params, std::span<const std::size_t> selected);

/// select_features followed by train_forest.
Forest fit_model(const Dataset& data, const ForestParams& params);

/// Mean leaf fraction over the trees for a full 73-long row.
double score_values(const Forest& forest, std::span<const double> values);

/// Checks completeness and the feature-order digest before scoring.
double predict_proba(const Forest& forest, const FeatureRow& row);

std::vector<double> predict_batch(const Forest& forest, const Dataset& data);

inline bool classify(double probability, double threshold) { return probability >= threshold; }

void write_model(std::ostream& out, const Forest& forest, const ArtifactHeader& header);
Forest read_model(std::istream& in);
Forest read_model_file(const std::filesystem::path& path);

namespace serial {
std::vector<double> f_scores(const Dataset& data);
Forest train_forest(const Dataset& data, const ForestParams& params, std::span<const std::size_t> selected);
std::vector<double> predict_batch(const Forest& forest, const Dataset& data);
}  // namespace serial

}  // namespace floodsignal
