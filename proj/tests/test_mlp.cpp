#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/mlp.hpp"
#include "support/generators.hpp"

using namespace legigpt;
using models::LabeledMatrix;
using models::MlpNet;
using models::TrainConfig;

namespace {

TrainConfig mlp_config() {
    TrainConfig c;
    c.kind = models::ModelKind::mlp;
    c.hidden_size = 16;
    c.batch_size = 32;
    c.max_epochs = 200;
    c.mlp_learning_rate = 5e-3;
    c.patience = 20;
    c.seed = 42;
    return c;
}

/// Symmetric relative error with an absolute floor for near-zero pairs.
double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("zero-initialized net outputs sigmoid of the output bias") {
    MlpNet net;
    net.init(4, 8, 1);
    std::fill(net.w1.begin(), net.w1.end(), 0.0);
    std::fill(net.w2.begin(), net.w2.end(), 0.0);
    net.b2 = 0.0;
    CHECK(net.probability(std::vector<double>{1, 2, 3, 4}) == doctest::Approx(0.5));
    net.b2 = 0.3;
    CHECK(net.probability(std::vector<double>{-1, 0, 1, 2}) ==
          doctest::Approx(models::sigmoid(0.3)));
}

TEST_CASE("analytic gradients match central finite differences") {
    const double eps = 1e-5;
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 25; ++draw) {
        MlpNet net;
        net.init(6, 5, 1000 + draw);
        Rng rng(200 + draw);
        // moderate random batch of 5 rows
        std::vector<double> X;
        std::vector<int> y;
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 6; ++j) X.push_back(rng.uniform_real(-2.0, 2.0));
            y.push_back(static_cast<int>(rng.uniform_index(2)));
        }
        const auto grads = net.batch_gradients(X, 6, y);
        std::vector<double> flat;
        flat.insert(flat.end(), grads.w1.begin(), grads.w1.end());
        flat.insert(flat.end(), grads.b1.begin(), grads.b1.end());
        flat.insert(flat.end(), grads.w2.begin(), grads.w2.end());
        flat.push_back(grads.b2);

        for (std::size_t p = 0; p < net.param_count(); ++p) {
            const double original = net.get_param(p);
            net.set_param(p, original + eps);
            const double up = net.batch_loss(X, 6, y);
            net.set_param(p, original - eps);
            const double down = net.batch_loss(X, 6, y);
            net.set_param(p, original);
            const double numeric = (up - down) / (2.0 * eps);
            if (std::abs(numeric) < 1e-10 && std::abs(flat[p]) < 1e-10) continue;
            worst = std::max(worst, rel_err(flat[p], numeric));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("mlp learns linearly separable data") {
    const auto data = testsupport::separable_dataset(7, 500);
    const auto split = models::split_train_test(data, 0.2, 42);
    const auto model = models::train_mlp(split.train, mlp_config());
    const auto probs = model.predict_proba(split.test.values, split.test.n_cols);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        hits += (probs[i] >= 0.5 ? 1 : 0) == split.test.labels[i];
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(probs.size()) >= 0.98);
    CHECK_FALSE(model.loss_trace.empty());
    for (const double p : probs) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("mlp imputes missing values with training-column means") {
    LabeledMatrix m;
    m.n_cols = 2;
    m.column_names = {"a", "b"};
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const int label = static_cast<int>(rng.uniform_index(2));
        const double a = label == 1 ? 1.0 + rng.normal() * 0.1 : -1.0 + rng.normal() * 0.1;
        const double b = rng.bernoulli(0.3) ? models::kMissing : rng.normal();
        m.push_row(std::vector<double>{a, b}, label, "B" + std::to_string(i), "L");
    }
    const auto model = models::train_mlp(m, mlp_config());
    // prediction accepts missing entries and treats them as the mean
    const double p_missing =
        model.predict_row(std::vector<double>{1.0, models::kMissing});
    const double p_mean =
        model.predict_row(std::vector<double>{1.0, model.impute_means[1]});
    CHECK(p_missing == doctest::Approx(p_mean));
}

TEST_CASE("mlp training is deterministic and rejects bad labels") {
    const auto data = testsupport::separable_dataset(9, 80);
    const auto a = models::train_mlp(data, mlp_config());
    const auto b = models::train_mlp(data, mlp_config());
    CHECK(models::serialize_mlp(a, "") == models::serialize_mlp(b, ""));

    LabeledMatrix bad = data;
    bad.labels[0] = 7;
    CHECK_THROWS_AS(models::train_mlp(bad, mlp_config()), Error);
}

TEST_CASE("mlp serialization round trip") {
    const auto data = testsupport::separable_dataset(13, 60);
    const auto model = models::train_mlp(data, mlp_config());
    const std::string wire = models::serialize_mlp(model, "kind=mlp demo");
    const auto parsed = models::parse_mlp(wire);
    CHECK(parsed.config_echo == "kind=mlp demo");
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(parsed.model.predict_row(data.row(i)) == model.predict_row(data.row(i)));
    }
    CHECK_THROWS_AS(models::parse_mlp("garbage"), Error);
}
