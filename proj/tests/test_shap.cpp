#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/shap.hpp"
#include "core/tree.hpp"
#include "support/generators.hpp"

using namespace legigpt;
using models::Objective;
using models::Tree;
using models::TreeEnsemble;
using models::TreeNode;

namespace {

TreeEnsemble single_leaf_ensemble(double value) {
    TreeEnsemble e;
    e.n_features = 3;
    e.base_score = 0.0;
    Tree t;
    TreeNode leaf;
    leaf.feature = -1;
    leaf.value = value;
    leaf.cover = 10.0;
    t.nodes.push_back(leaf);
    e.trees.push_back(t);
    return e;
}

/// depth-1 tree: split f0 at `threshold`, equal covers, leaves (-1, +1)
TreeEnsemble step_ensemble(double threshold = 0.5, std::size_t n_features = 3) {
    TreeEnsemble e;
    e.n_features = n_features;
    Tree t;
    TreeNode root;
    root.feature = 0;
    root.threshold = threshold;
    root.left = 1;
    root.right = 2;
    root.cover = 10.0;
    TreeNode left;
    left.feature = -1;
    left.value = -1.0;
    left.cover = 5.0;
    TreeNode right;
    right.feature = -1;
    right.value = 1.0;
    right.cover = 5.0;
    t.nodes = {root, left, right};
    e.trees.push_back(t);
    return e;
}

}  // namespace

TEST_CASE("single-leaf tree attributes nothing, base equals the leaf") {
    const auto e = single_leaf_ensemble(0.7);
    const std::vector<double> row{0.1, 0.2, 0.3};
    const auto attr = shap::tree_shap(e, row);
    CHECK(attr.base_value == doctest::Approx(0.7));
    for (const double v : attr.attributions) CHECK(v == 0.0);
    const auto brute = shap::brute_force_shap(e, row);
    for (const double v : brute) CHECK(v == 0.0);
}

TEST_CASE("depth-1 split carries the full deviation") {
    const auto e = step_ensemble();
    const std::vector<double> row{0.9, 0.0, 0.0};
    const auto attr = shap::tree_shap(e, row);
    CHECK(attr.base_value == doctest::Approx(0.0));
    CHECK(attr.attributions[0] == doctest::Approx(1.0));
    CHECK(attr.attributions[1] == 0.0);
    CHECK(attr.attributions[2] == 0.0);

    const auto brute = shap::brute_force_shap(e, row);
    CHECK(brute[0] == doctest::Approx(attr.attributions[0]));
}

TEST_CASE("structurally exchangeable features receive equal attributions") {
    // two identical-shape trees, one splitting f0, one splitting f1
    TreeEnsemble e = step_ensemble(0.5, 3);
    TreeEnsemble other = step_ensemble(0.5, 3);
    other.trees[0].nodes[0].feature = 1;
    e.trees.push_back(other.trees[0]);

    const std::vector<double> row{0.9, 0.9, 0.2};
    const auto brute = shap::brute_force_shap(e, row);
    CHECK(brute[0] == doctest::Approx(brute[1]).epsilon(1e-12));
    const auto attr = shap::tree_shap(e, row);
    CHECK(attr.attributions[0] == doctest::Approx(attr.attributions[1]).epsilon(1e-12));
}

TEST_CASE("missing values follow the default direction") {
    auto e = step_ensemble();
    e.trees[0].nodes[0].default_left = false;
    const std::vector<double> row{models::kMissing, 0.0, 0.0};
    const auto attr = shap::tree_shap(e, row);
    // routed right -> same as a row with f0 above the threshold
    CHECK(attr.base_value + attr.attributions[0] == doctest::Approx(1.0));
    const auto brute = shap::brute_force_shap(e, row);
    CHECK(brute[0] == doctest::Approx(attr.attributions[0]).epsilon(1e-12));
}

TEST_CASE("oracle equivalence and local accuracy over seeded random ensembles") {
    int checked_rows = 0;
    for (std::uint64_t seed = 1; seed <= 110; ++seed) {
        const auto objective = seed % 3 == 0 ? Objective::classification_forest
                                             : Objective::logistic_boost;
        const auto e = testsupport::random_ensemble(seed, 5, 3, 10, objective);
        Rng rng(seed * 7919);
        for (int r = 0; r < 10; ++r) {
            const auto row = testsupport::random_row(rng, 5, 0.15);
            const auto fast = shap::tree_shap(e, row);
            const auto brute = shap::brute_force_shap(e, row);
            double max_diff = 0.0;
            double sum = 0.0;
            for (std::size_t j = 0; j < 5; ++j) {
                max_diff = std::max(max_diff, std::abs(fast.attributions[j] - brute[j]));
                sum += fast.attributions[j];
            }
            REQUIRE(max_diff < 1e-9);
            const double raw = e.raw_output(row);
            REQUIRE(std::abs(fast.base_value + sum - raw) < 1e-9);
            ++checked_rows;
        }
    }
    CHECK(checked_rows == 1100);
}

TEST_CASE("dummy feature attribution is exactly zero") {
    // feature 4 is never used by construction with 3 features available
    const auto e = testsupport::random_ensemble(3, 3, 3, 8, Objective::logistic_boost);
    TreeEnsemble wide = e;
    wide.n_features = 5;
    Rng rng(99);
    for (int r = 0; r < 20; ++r) {
        const auto row = testsupport::random_row(rng, 5, 0.1);
        const auto attr = shap::tree_shap(wide, row);
        CHECK(attr.attributions[3] == 0.0);
        CHECK(attr.attributions[4] == 0.0);
    }
}

TEST_CASE("attribution is additive across trees") {
    const auto e = testsupport::random_ensemble(17, 4, 3, 6, Objective::logistic_boost);
    Rng rng(5);
    const auto row = testsupport::random_row(rng, 4, 0.0);
    const auto whole = shap::tree_shap(e, row);

    std::vector<double> summed(4, 0.0);
    double base = e.base_score;
    for (const auto& tree : e.trees) {
        TreeEnsemble single;
        single.n_features = 4;
        single.base_score = 0.0;
        single.objective = Objective::logistic_boost;
        single.trees.push_back(tree);
        const auto part = shap::tree_shap(single, row);
        for (std::size_t j = 0; j < 4; ++j) summed[j] += part.attributions[j];
        base += part.base_value;
    }
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(whole.attributions[j] == doctest::Approx(summed[j]).epsilon(1e-12));
    }
    CHECK(whole.base_value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("zero-cover internal node is rejected") {
    auto e = step_ensemble();
    e.trees[0].nodes[0].cover = 0.0;
    const std::vector<double> row{0.9, 0.0, 0.0};
    CHECK_THROWS_AS(shap::tree_shap(e, row), Error);
}

TEST_CASE("brute force guards the active-feature count") {
    // one depth-1 tree per feature: 16 active features in total
    TreeEnsemble e;
    e.n_features = 16;
    for (int f = 0; f < 16; ++f) {
        auto one = step_ensemble(0.5, 16);
        one.trees[0].nodes[0].feature = f;
        e.trees.push_back(one.trees[0]);
    }
    Rng rng(1);
    const auto row = testsupport::random_row(rng, 16, 0.0);
    CHECK_THROWS_AS(shap::brute_force_shap(e, row, 8), Error);
    CHECK_NOTHROW(shap::brute_force_shap(e, row, 16));
}

TEST_CASE("shap_matrix equals row-wise tree_shap and handles zero trees") {
    const auto e = testsupport::random_ensemble(31, 4, 3, 5, Objective::logistic_boost);
    models::LabeledMatrix rows;
    rows.n_cols = 4;
    rows.column_names = {"a", "b", "c", "d"};
    Rng rng(8);
    for (int i = 0; i < 7; ++i) {
        rows.push_row(testsupport::random_row(rng, 4, 0.2), 0, "B" + std::to_string(i),
                      "L" + std::to_string(i));
    }
    const auto matrix = shap::shap_matrix(e, rows);
    REQUIRE(matrix.n_rows() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        const auto attr = shap::tree_shap(e, rows.row(i));
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(matrix.row(i)[j] == attr.attributions[j]);
        }
    }

    TreeEnsemble empty;
    empty.n_features = 4;
    empty.base_score = 0.25;
    const auto zero_matrix = shap::shap_matrix(empty, rows);
    CHECK(zero_matrix.base_value == doctest::Approx(0.25));
    for (const double v : zero_matrix.values) CHECK(v == 0.0);
}

TEST_CASE("importance ranking orders by mean absolute value with stable ties") {
    shap::ShapMatrix m;
    m.n_cols = 3;
    // col0: {+1,-1} -> mean | | = 1; col1: {0.5,0.5} -> 0.5; col2 zeros
    m.values = {1.0, 0.5, 0.0, -1.0, 0.5, 0.0};
    m.row_ids = {{"B1", "L1"}, {"B2", "L2"}};
    const auto ranking = shap::importance_ranking(m, {"x", "y", "z"});
    REQUIRE(ranking.size() == 3);
    CHECK(ranking[0].name == "x");
    CHECK(ranking[0].mean_abs_shap == doctest::Approx(1.0));
    CHECK(ranking[1].name == "y");
    CHECK(ranking[2].name == "z");

    shap::ShapMatrix zeros;
    zeros.n_cols = 3;
    zeros.values = {0, 0, 0, 0, 0, 0};
    zeros.row_ids = m.row_ids;
    const auto tied = shap::importance_ranking(zeros, {"x", "y", "z"});
    CHECK(tied[0].feature == 0);
    CHECK(tied[1].feature == 1);
    CHECK(tied[2].feature == 2);
}

TEST_CASE("shap correlation: identities, negation, and a naive oracle") {
    shap::ShapMatrix m;
    m.n_cols = 3;
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.normal();
        m.values.push_back(x);
        m.values.push_back(-x);
        m.values.push_back(0.0);  // zero variance
        m.row_ids.push_back({"B" + std::to_string(i), "L"});
    }
    const auto corr = shap::shap_correlation(m);
    CHECK(corr.at(0, 0) == doctest::Approx(1.0));
    CHECK(corr.at(0, 1) == doctest::Approx(-1.0));
    CHECK_FALSE(corr.is_defined(2, 2));
    CHECK_FALSE(corr.is_defined(0, 2));
    CHECK(corr.at(1, 0) == corr.at(0, 1));

    // naive two-pass Pearson on column pair (0,1)
    double mean0 = 0.0, mean1 = 0.0;
    const std::size_t n = m.n_rows();
    for (std::size_t i = 0; i < n; ++i) {
        mean0 += m.row(i)[0];
        mean1 += m.row(i)[1];
    }
    mean0 /= static_cast<double>(n);
    mean1 /= static_cast<double>(n);
    double num = 0.0, d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (m.row(i)[0] - mean0) * (m.row(i)[1] - mean1);
        d0 += (m.row(i)[0] - mean0) * (m.row(i)[0] - mean0);
        d1 += (m.row(i)[1] - mean1) * (m.row(i)[1] - mean1);
    }
    CHECK(corr.at(0, 1) == doctest::Approx(num / std::sqrt(d0 * d1)).epsilon(1e-12));
}

TEST_CASE("nearly-proportional columns correlate to ~1") {
    shap::ShapMatrix m;
    m.n_cols = 2;
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.normal();
        m.values.push_back(x);
        m.values.push_back(2.0 * x + 1e-9 * rng.normal());
        m.row_ids.push_back({"B" + std::to_string(i), "L"});
    }
    const auto corr = shap::shap_correlation(m);
    CHECK(corr.at(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dependence series is a step function for a depth-1 model") {
    const auto e = step_ensemble(0.5, 2);
    models::LabeledMatrix rows;
    rows.n_cols = 2;
    rows.column_names = {"f1", "f2"};
    Rng rng(4);
    for (int i = 0; i < 40; ++i) {
        const std::vector<double> row{rng.next_unit(), rng.next_unit()};
        rows.push_row(row, 0, "B" + std::to_string(i), "L");
    }
    const auto matrix = shap::shap_matrix(e, rows);
    const auto series = shap::dependence_series(matrix, rows, 0);
    REQUIRE(series.points.size() == 40);
    for (const auto& p : series.points) {
        if (p.feature_value < 0.5) {
            CHECK(p.shap_value == doctest::Approx(-1.0));
        } else {
            CHECK(p.shap_value == doctest::Approx(1.0));
        }
    }

    const auto buckets = shap::bucketed_means(series, 4);
    REQUIRE(buckets.size() >= 2);
    for (std::size_t i = 1; i < buckets.size(); ++i) {
        CHECK(buckets[i].mean_shap >= buckets[i - 1].mean_shap - 1e-12);
    }
}

TEST_CASE("dependence series routes missing values to the missing bucket") {
    const auto e = step_ensemble(0.5, 2);
    models::LabeledMatrix rows;
    rows.n_cols = 2;
    rows.column_names = {"f1", "f2"};
    rows.push_row(std::vector<double>{models::kMissing, 0.3}, 0, "B1", "L1");
    rows.push_row(std::vector<double>{0.7, 0.3}, 0, "B2", "L2");
    const auto matrix = shap::shap_matrix(e, rows);
    const auto series = shap::dependence_series(matrix, rows, 0);
    CHECK(series.points[0].missing);
    CHECK_FALSE(series.points[1].missing);
    const auto buckets = shap::bucketed_means(series, 3);
    std::size_t total = 0;
    for (const auto& b : buckets) total += b.count;
    CHECK(total == 1);  // only the non-missing point lands in buckets
}
