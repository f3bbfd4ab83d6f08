#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/forest.hpp"
#include "core/gbdt.hpp"
#include "core/tree.hpp"
#include "support/generators.hpp"

using namespace legigpt;
using models::GrowthPolicy;
using models::LabeledMatrix;
using models::ModelKind;
using models::TrainConfig;
using models::Tree;
using models::TreeEnsemble;
using models::TreeNode;

namespace {

TrainConfig gbdt_config(GrowthPolicy policy) {
    TrainConfig c;
    c.kind = ModelKind::gbdt;
    c.growth_policy = policy;
    c.n_estimators = 30;
    c.learning_rate = 0.3;
    c.max_depth = 4;
    c.num_leaves = 8;
    c.seed = 42;
    return c;
}

TrainConfig rf_config(int n_estimators = 20, int max_depth = 8) {
    TrainConfig c;
    c.kind = ModelKind::rf;
    c.n_estimators = n_estimators;
    c.max_depth = max_depth;
    c.seed = 42;
    return c;
}

void check_covers(const TreeEnsemble& e) {
    for (const auto& tree : e.trees) {
        for (const auto& n : tree.nodes) {
            if (!n.is_leaf()) {
                const double children = tree.nodes[n.left].cover + tree.nodes[n.right].cover;
                CHECK(n.cover == children);  // built as the exact sum
            }
        }
    }
}

}  // namespace

TEST_CASE("tree predict routes missing values by default direction") {
    Tree t;
    TreeNode root;
    root.feature = 2;
    root.threshold = 0.5;
    root.left = 1;
    root.right = 2;
    root.cover = 4;
    root.default_left = false;
    TreeNode l{-1, 0, -1, -1, true, 10.0, 2};
    TreeNode r{-1, 0, -1, -1, true, 20.0, 2};
    t.nodes = {root, l, r};

    CHECK(t.predict(std::vector<double>{0, 0, 0.4}) == 10.0);
    CHECK(t.predict(std::vector<double>{0, 0, 0.6}) == 20.0);
    CHECK(t.predict(std::vector<double>{0, 0, models::kMissing}) == 20.0);
    t.nodes[0].default_left = true;
    CHECK(t.predict(std::vector<double>{0, 0, models::kMissing}) == 10.0);
}

TEST_CASE("ensemble of zero trees predicts the base score") {
    TreeEnsemble e;
    e.n_features = 2;
    e.base_score = 0.0;
    const auto p = e.predict_proba({0.0, 0.0, 1.0, 1.0}, 2);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(e.predict_proba({0.0}, 1), Error);
}

TEST_CASE("single-leaf boosted tree predicts sigmoid of the leaf value") {
    TreeEnsemble e;
    e.n_features = 1;
    e.base_score = 0.0;
    Tree t;
    TreeNode leaf;
    leaf.feature = -1;
    leaf.value = 0.8;
    leaf.cover = 1;
    t.nodes.push_back(leaf);
    e.trees.push_back(t);
    CHECK(e.predict_proba_row(std::vector<double>{0.3}) ==
          doctest::Approx(models::sigmoid(0.8)));
}

TEST_CASE("gbdt: single-split fixture reproduces hand-computed leaf values") {
    LabeledMatrix m;
    m.n_cols = 1;
    m.column_names = {"x"};
    const double xs[] = {1.0, 2.0, 3.0, 4.0};
    const int ys[] = {0, 0, 1, 1};
    for (int i = 0; i < 4; ++i) {
        m.push_row(std::vector<double>{xs[i]}, ys[i], "B" + std::to_string(i), "L");
    }
    TrainConfig c = gbdt_config(GrowthPolicy::level_wise);
    c.n_estimators = 1;
    c.learning_rate = 1.0;
    c.max_depth = 1;
    c.l2_regularization = 1.0;
    c.min_child_weight = 0.1;

    const auto trained = models::train_gbdt(m, c);
    REQUIRE(trained.ensemble.trees.size() == 1);
    const auto& tree = trained.ensemble.trees[0];
    REQUIRE(tree.nodes.size() == 3);
    CHECK(trained.ensemble.base_score == doctest::Approx(0.0));
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == doctest::Approx(2.5));
    // initial p = 0.5 everywhere: GL = 1.0, HL = 0.5 -> w = -1/1.5
    CHECK(tree.nodes[tree.nodes[0].left].value == doctest::Approx(-1.0 / 1.5));
    CHECK(tree.nodes[tree.nodes[0].right].value == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("gbdt: pure labels drive probability up and loss strictly down") {
    LabeledMatrix m;
    m.n_cols = 2;
    m.column_names = {"a", "b"};
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        m.push_row(std::vector<double>{rng.next_unit(), rng.next_unit()}, 1,
                   "B" + std::to_string(i), "L");
    }
    TrainConfig c = gbdt_config(GrowthPolicy::level_wise);
    c.n_estimators = 1;
    const auto trained = models::train_gbdt(m, c);
    const auto probs = trained.ensemble.predict_proba(m.values, 2);
    for (const double p : probs) CHECK(p > 0.7);
    REQUIRE(trained.loss_trace.size() == 2);
    CHECK(trained.loss_trace[1] < trained.loss_trace[0]);
}

TEST_CASE("gbdt: both growth policies learn xor") {
    const auto data = testsupport::xor_dataset(11, 400);
    for (const auto policy : {GrowthPolicy::level_wise, GrowthPolicy::leaf_wise}) {
        CAPTURE(static_cast<int>(policy));
        const auto trained = models::train_gbdt(data, gbdt_config(policy));
        const auto pred = trained.ensemble.classify(data.values, data.n_cols);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            hits += pred[i] == data.labels[i];
        }
        CHECK(static_cast<double>(hits) / static_cast<double>(pred.size()) >= 0.95);

        for (std::size_t r = 1; r < trained.loss_trace.size(); ++r) {
            CHECK(trained.loss_trace[r] <= trained.loss_trace[r - 1] + 1e-12);
        }
        check_covers(trained.ensemble);
    }
}

TEST_CASE("gbdt: growth bounds bind per policy") {
    const auto data = testsupport::xor_dataset(13, 300, 4);
    TrainConfig level = gbdt_config(GrowthPolicy::level_wise);
    level.max_depth = 2;
    for (const auto& tree : models::train_gbdt(data, level).ensemble.trees) {
        CHECK(tree.max_depth() <= 2);
    }
    TrainConfig leaf = gbdt_config(GrowthPolicy::leaf_wise);
    leaf.num_leaves = 5;
    for (const auto& tree : models::train_gbdt(data, leaf).ensemble.trees) {
        CHECK(tree.leaf_count() <= 5);
    }
}

TEST_CASE("gbdt: missing-value rows follow the learned default direction") {
    // feature 0 informative, with missing entries for some rows
    LabeledMatrix m;
    m.n_cols = 2;
    m.column_names = {"a", "b"};
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const int label = static_cast<int>(rng.uniform_index(2));
        double v = label == 1 ? 0.8 + 0.2 * rng.next_unit() : 0.2 * rng.next_unit();
        if (rng.bernoulli(0.2) && label == 1) v = models::kMissing;
        m.push_row(std::vector<double>{v, rng.next_unit()}, label, "B" + std::to_string(i),
                   "L");
    }
    TrainConfig c = gbdt_config(GrowthPolicy::level_wise);
    c.n_estimators = 5;
    const auto trained = models::train_gbdt(m, c);

    // prediction with f0 missing equals prediction with f0 forced to a
    // value that routes to the default side at every node splitting f0
    std::vector<double> with_missing{models::kMissing, 0.5};
    const double p_missing = trained.ensemble.predict_proba_row(with_missing);
    bool default_left_everywhere = true;
    for (const auto& tree : trained.ensemble.trees) {
        for (const auto& n : tree.nodes) {
            if (!n.is_leaf() && n.feature == 0 && !n.default_left) {
                default_left_everywhere = false;
            }
        }
    }
    // with this construction missing rows are all label 1 (high f0), so
    // the learned default must route them with the high side
    CHECK_FALSE(default_left_everywhere);
    const double p_high = trained.ensemble.predict_proba_row(std::vector<double>{0.9, 0.5});
    CHECK(p_missing == doctest::Approx(p_high).epsilon(0.05));
}

TEST_CASE("gbdt: constant features yield single-leaf trees that still move the prior") {
    LabeledMatrix m;
    m.n_cols = 1;
    m.column_names = {"x"};
    for (int i = 0; i < 10; ++i) {
        m.push_row(std::vector<double>{1.0}, i < 7 ? 1 : 0, "B" + std::to_string(i), "L");
    }
    TrainConfig c = gbdt_config(GrowthPolicy::level_wise);
    c.n_estimators = 3;
    const auto trained = models::train_gbdt(m, c);
    for (const auto& tree : trained.ensemble.trees) {
        CHECK(tree.nodes.size() == 1);
    }
    for (std::size_t r = 1; r < trained.loss_trace.size(); ++r) {
        CHECK(trained.loss_trace[r] <= trained.loss_trace[r - 1] + 1e-12);
    }
}

TEST_CASE("gbdt: non-binary labels are rejected") {
    LabeledMatrix m;
    m.n_cols = 1;
    m.column_names = {"x"};
    m.push_row(std::vector<double>{1.0}, 1, "B1", "L");
    m.labels[0] = 2;
    CHECK_THROWS_AS(models::train_gbdt(m, gbdt_config(GrowthPolicy::level_wise)), Error);
}

TEST_CASE("gbdt: identical seeds give bit-identical models") {
    const auto data = testsupport::xor_dataset(21, 150);
    TrainConfig c = gbdt_config(GrowthPolicy::leaf_wise);
    c.subsample = 0.8;
    c.colsample = 0.9;
    const auto a = models::train_gbdt(data, c);
    const auto b = models::train_gbdt(data, c);
    CHECK(models::serialize_ensemble(a.ensemble, "") ==
          models::serialize_ensemble(b.ensemble, ""));
}

TEST_CASE("serialization round trip preserves structure and predictions") {
    const auto data = testsupport::xor_dataset(31, 200);
    const auto trained = models::train_gbdt(data, gbdt_config(GrowthPolicy::level_wise));
    const std::string wire = models::serialize_ensemble(trained.ensemble, "kind=gbdt demo");
    const auto parsed = models::parse_ensemble(wire);
    CHECK(parsed.config_echo == "kind=gbdt demo");
    CHECK(parsed.ensemble.trees.size() == trained.ensemble.trees.size());
    CHECK(parsed.ensemble.base_score == trained.ensemble.base_score);
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        CHECK(parsed.ensemble.raw_output(data.row(i)) ==
              trained.ensemble.raw_output(data.row(i)));
    }
    CHECK_THROWS_AS(models::parse_ensemble("not a model"), Error);
}

TEST_CASE("gini impurity boundary values") {
    CHECK(models::gini_impurity(5, 5) == doctest::Approx(0.5));
    CHECK(models::gini_impurity(10, 0) == doctest::Approx(0.0));
    CHECK(models::gini_impurity(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("rf: single unbootstrapped deep tree memorizes separable data") {
    const auto data = testsupport::separable_dataset(41, 120);
    TrainConfig c = rf_config(1, 50);
    c.bootstrap = false;
    const auto ensemble = models::train_rf(data, c);
    const auto pred = ensemble.classify(data.values, data.n_cols);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        CHECK(pred[i] == data.labels[i]);
    }
    check_covers(ensemble);
}

TEST_CASE("rf: label-identical feature wins the root split in seeded trees") {
    LabeledMatrix m;
    m.n_cols = 2;
    m.column_names = {"signal", "noise"};
    Rng rng(55);
    for (int i = 0; i < 200; ++i) {
        const int label = static_cast<int>(rng.uniform_index(2));
        m.push_row(std::vector<double>{static_cast<double>(label), rng.next_unit()}, label,
                   "B" + std::to_string(i), "L");
    }
    int signal_roots = 0;
    for (int seed = 0; seed < 100; ++seed) {
        TrainConfig c = rf_config(1, 6);
        c.seed = static_cast<std::uint64_t>(seed);
        const auto ensemble = models::train_rf(m, c);
        if (ensemble.trees[0].nodes[0].feature == 0) ++signal_roots;
    }
    CHECK(signal_roots >= 95);
}

TEST_CASE("rf: prediction equals the mean of per-tree leaf frequencies") {
    const auto data = testsupport::xor_dataset(61, 250);
    const auto ensemble = models::train_rf(data, rf_config(15, 8));
    for (std::size_t i = 0; i < 20; ++i) {
        double naive = 0.0;
        for (const auto& tree : ensemble.trees) naive += tree.predict(data.row(i));
        naive /= static_cast<double>(ensemble.trees.size());
        const double p = ensemble.predict_proba_row(data.row(i));
        CHECK(p == doctest::Approx(naive).epsilon(1e-12));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    check_covers(ensemble);
}

TEST_CASE("rf: deterministic under a fixed seed") {
    const auto data = testsupport::xor_dataset(71, 150);
    const auto a = models::train_rf(data, rf_config(10, 6));
    const auto b = models::train_rf(data, rf_config(10, 6));
    CHECK(models::serialize_ensemble(a, "") == models::serialize_ensemble(b, ""));
}

TEST_CASE("train config validation") {
    TrainConfig c = gbdt_config(GrowthPolicy::level_wise);
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = gbdt_config(GrowthPolicy::leaf_wise);
    c.num_leaves = 1;
    CHECK_THROWS_AS(c.validate(), Error);
    c = rf_config();
    c.n_estimators = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = gbdt_config(GrowthPolicy::level_wise);
    c.min_child_weight = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
}
