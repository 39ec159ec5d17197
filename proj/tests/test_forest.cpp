#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "floodsignal/forest.hpp"
#include "floodsignal/random.hpp"
#include "floodsignal/synthgen.hpp"
#include "oracles.hpp"

using namespace floodsignal;

namespace {

Dataset one_column(std::vector<double> x, std::vector<int> y) {
    Dataset d(1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v[] = {x[i]};
        d.add_row(v, y[i] != 0);
    }
    return d;
}

std::vector<std::uint8_t> bytes(std::vector<int> y) { return {y.begin(), y.end()}; }

Forest leaf_forest(std::vector<double> fractions) {
    Forest f;
    f.feature_order_digest = feature_order_digest();
    f.selected_features = {0};
    f.params.n_trees = fractions.size();
    f.params.k_features = 1;
    for (double p : fractions) {
        Tree t;
        t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, p});
        f.trees.push_back(t);
    }
    return f;
}

FeatureRow complete_row() {
    FeatureRow r;
    r.complete = true;
    r.values.fill(1.0);
    return r;
}

std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> s(d.rows());
    std::iota(s.begin(), s.end(), 0);
    return s;
}

}  // namespace

TEST_CASE("ANOVA F") {
    const double x[] = {1, 2, 3, 7, 8, 9};
    const auto y = bytes({0, 0, 0, 1, 1, 1});
    CHECK(anova_f_score(x, y) == doctest::Approx(54.0).epsilon(1e-12));
    const double constant[] = {4, 4, 4, 4, 4, 4};
    CHECK(anova_f_score(constant, y) == 0.0);
    const double separating[] = {0, 0, 0, 1, 1, 1};
    CHECK(anova_f_score(separating, y) == kInfiniteF);
    CHECK_THROWS_AS(anova_f_score(x, bytes({1, 1, 1, 1, 1, 1})), std::invalid_argument);
    const double two[] = {1, 2};
    CHECK_THROWS_AS(anova_f_score(two, bytes({0, 1})), std::invalid_argument);

    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.below(40);
        std::vector<double> col(n);
        std::vector<int> lab(n);
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = rng.normal() * 10.0;
            lab[i] = static_cast<int>(rng.below(2));
        }
        lab[0] = 0;
        lab[1] = 1;
        const auto f = anova_f_score(col, bytes(lab));
        CHECK(f == doctest::Approx(oracle::anova(col, lab)).epsilon(1e-8));
        for (double& v : col) v *= 37.5;
        CHECK(anova_f_score(col, bytes(lab)) == doctest::Approx(f).epsilon(1e-9));
    }
}

TEST_CASE("select_features") {
    Dataset d(4);
    Rng rng(8);
    for (int i = 0; i < 40; ++i) {
        const bool pos = i % 2;
        const double noise = rng.normal();
        const double shifted = rng.normal() + (pos ? 3.0 : 0.0);
        const double row[] = {noise, pos ? 1.0 : 0.0, shifted, shifted};
        d.add_row(row, pos);
    }
    CHECK(select_features(d, 4) == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(select_features(d, 1) == std::vector<std::size_t>{1});
    CHECK(select_features(d, 2) == std::vector<std::size_t>{1, 2});  // columns 2 and 3 tie
    CHECK_THROWS(select_features(d, 5));

    std::vector<std::size_t> order(d.rows());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    CHECK(select_features(d.subset(order), 2) == select_features(d, 2));
    CHECK(serial::f_scores(d) == f_scores(d));
}

TEST_CASE("tree stops and splits") {
    ForestParams params;
    params.max_depth = 2;
    params.mtry = 1;
    const std::size_t cand[] = {0};
    SUBCASE("pure sample") {
        const auto d = one_column({1, 2, 3}, {1, 1, 1});
        const auto t = train_tree(d, all_rows(d), cand, params, 1);
        REQUIRE(t.nodes.size() == 1);
        CHECK(t.nodes[0].positive_fraction == 1.0);
    }
    SUBCASE("midpoint split") {
        const auto d = one_column({1, 2, 8, 9}, {0, 0, 1, 1});
        const auto t = train_tree(d, all_rows(d), cand, params, 1);
        REQUIRE(t.nodes.size() == 3);
        CHECK(t.nodes[0].threshold == 5.0);
        CHECK(t.nodes[t.nodes[0].left].positive_fraction == 0.0);
        CHECK(t.nodes[t.nodes[0].right].positive_fraction == 1.0);
        const double lo[] = {4.9}, hi[] = {5.1};
        CHECK(t.predict(lo) == 0.0);
        CHECK(t.predict(hi) == 1.0);
    }
    SUBCASE("no split reduces impurity") {
        const auto d = one_column({3, 3, 3, 3}, {0, 1, 0, 0});
        const auto t = train_tree(d, all_rows(d), cand, params, 1);
        REQUIRE(t.nodes.size() == 1);
        CHECK(t.nodes[0].positive_fraction == 0.25);
    }
}

TEST_CASE("root split matches exhaustive enumeration") {
    Rng rng(21);
    ForestParams params;
    params.max_depth = 2;
    params.mtry = 2;
    const std::size_t cand[] = {0, 1};
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        Dataset d(2);
        std::vector<std::array<double, 2>> x;
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back({double(rng.below(6)), double(rng.below(6))});
            y.push_back(static_cast<int>(rng.below(2)));
            d.add_row(x.back(), y.back() != 0);
        }
        const auto want = oracle::root_split(x, y);
        const auto t = train_tree(d, all_rows(d), cand, params, rng.next());
        INFO("trial " << trial);
        CHECK(t.nodes[0].is_leaf() == want.leaf);
        if (!want.leaf && !t.nodes[0].is_leaf()) {
            CHECK(static_cast<std::size_t>(t.nodes[0].feature) == want.feature);
            CHECK(t.nodes[0].threshold == want.threshold);
        }
        CHECK(t.depth() <= 2);
    }
}

TEST_CASE("forest training is deterministic and independent of the kernel") {
    const Dataset d = synth::separable_dataset(120, 3, 5).data;
    ForestParams params;
    params.n_trees = 40;
    params.k_features = 10;
    params.seed = 77;
    const Forest a = fit_model(d, params);
    const Forest b = fit_model(d, params);
    CHECK(a == b);
    CHECK(a.selected_features.size() == 10);
    for (const auto& t : a.trees) {
        CHECK(t.depth() <= 2);
        for (const auto& n : t.nodes)
            if (!n.is_leaf())
                CHECK(std::binary_search(a.selected_features.begin(), a.selected_features.end(),
                                         static_cast<std::size_t>(n.feature)));
    }
    CHECK(serial::train_forest(d, params, a.selected_features) == a);
    CHECK(serial::predict_batch(a, d) == predict_batch(a, d));

    params.seed = 78;
    CHECK_FALSE(fit_model(d, params) == a);

    params.n_trees = 1;
    const Forest single = train_forest(d, params, a.selected_features);
    const auto seed = tree_seed(params.seed, 0);
    const auto sample = bootstrap_sample(d, derive_seed(seed, "bootstrap"), false);
    CHECK(sample.size() == d.rows());
    CHECK(single.trees[0] == train_tree(d, sample, a.selected_features, params, seed));

    Dataset one_class(2);
    const double row[] = {1, 2};
    one_class.add_row(row, true);
    one_class.add_row(row, true);
    one_class.add_row(row, true);
    params.k_features = 2;
    CHECK_THROWS(fit_model(one_class, params));
}

TEST_CASE("balanced bootstrap draws both classes equally") {
    const Dataset d = synth::separable_dataset(100, 3, 5).data;
    Dataset skewed(d.features());
    for (std::size_t r = 0; r < d.rows(); ++r)
        if (d.label(r) == 0 || r % 10 == 1) skewed.add_row(d.row(r), d.label(r));
    const auto sample = bootstrap_sample(skewed, 9, true);
    std::size_t pos = 0;
    for (auto r : sample) pos += skewed.label(r);
    CHECK(sample.size() == skewed.rows());
    CHECK(pos * 2 == doctest::Approx(double(sample.size())).epsilon(0.05));
}

TEST_CASE("prediction") {
    CHECK(predict_proba(leaf_forest({1.0, 1.0}), complete_row()) == 1.0);
    CHECK(predict_proba(leaf_forest({0.0, 0.5}), complete_row()) == 0.25);
    CHECK(predict_proba(leaf_forest({0.3, 0.3, 0.3}), complete_row()) == doctest::Approx(0.3));

    auto skewed = leaf_forest({0.5});
    skewed.feature_order_digest = "0000000000000000";
    CHECK_THROWS(predict_proba(skewed, complete_row()));
    auto incomplete = complete_row();
    incomplete.complete = false;
    CHECK_THROWS(predict_proba(leaf_forest({0.5}), incomplete));

    CHECK(classify(0.25, 0.2));
    CHECK(classify(0.2, 0.2));
    CHECK_FALSE(classify(0.19, 0.2));

    const Dataset d = synth::separable_dataset(80, 3, 2).data;
    ForestParams params;
    params.n_trees = 25;
    params.k_features = 8;
    const auto scores = predict_batch(fit_model(d, params), d);
    std::size_t previous = scores.size() + 1;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        std::size_t alerts = 0;
        for (double s : scores) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            alerts += classify(s, t);
        }
        CHECK(alerts <= previous);
        previous = alerts;
    }
}

TEST_CASE("params validation") {
    ForestParams p;
    CHECK(p.effective_mtry() == 6);
    p.n_trees = 0;
    CHECK_THROWS_WITH(p.validate(), doctest::Contains("n_trees"));
    p.n_trees = 1;
    p.k_features = 80;
    CHECK_THROWS_WITH(p.validate(), doctest::Contains("k_features"));
}

TEST_CASE("model file round-trip") {
    const Dataset d = synth::separable_dataset(60, 3, 3).data;
    ForestParams params;
    params.n_trees = 12;
    params.k_features = 9;
    params.seed = 5;
    const Forest f = fit_model(d, params);
    std::stringstream ss;
    write_model(ss, f, ArtifactHeader{});
    const std::string text = ss.str();
    const Forest back = read_model(ss);
    CHECK(back == f);
    CHECK(predict_batch(back, d) == predict_batch(f, d));
    std::stringstream again;
    write_model(again, back, ArtifactHeader{});
    CHECK(again.str() == text);

    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS(read_model(truncated));
    std::istringstream garbage("format something-else 9\n");
    CHECK_THROWS(read_model(garbage));
}
