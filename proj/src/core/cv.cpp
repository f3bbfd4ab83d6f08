#include "core/cv.hpp"

#include <algorithm>
#include <sstream>

#include "core/errors.hpp"
#include "core/forest.hpp"
#include "core/gbdt.hpp"
#include "core/rng.hpp"

namespace legigpt::models {

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::mlp: return "mlp";
        case ModelKind::rf: return "rf";
        case ModelKind::gbdt: return "gbdt";
    }
    return "?";
}

const char* to_string(GrowthPolicy g) {
    return g == GrowthPolicy::level_wise ? "level_wise" : "leaf_wise";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "mlp") return ModelKind::mlp;
    if (s == "rf") return ModelKind::rf;
    if (s == "gbdt") return ModelKind::gbdt;
    throw Error(errc::parse, "unknown model kind '" + std::string(s) + "'");
}

GrowthPolicy parse_growth_policy(std::string_view s) {
    if (s == "level_wise") return GrowthPolicy::level_wise;
    if (s == "leaf_wise") return GrowthPolicy::leaf_wise;
    throw Error(errc::parse, "unknown growth policy '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) {
        throw Error(errc::invalid_argument, "train config: " + what);
    };
    if (n_estimators < 1) fail("n_estimators must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        fail("learning_rate must be in (0,1]");
    }
    if (kind == ModelKind::gbdt && growth_policy == GrowthPolicy::level_wise &&
        max_depth < 1) {
        fail("max_depth must be >= 1 for level_wise growth");
    }
    if (kind == ModelKind::gbdt && growth_policy == GrowthPolicy::leaf_wise &&
        num_leaves < 2) {
        fail("num_leaves must be >= 2 for leaf_wise growth");
    }
    if (kind == ModelKind::rf && max_depth < 1) fail("max_depth must be >= 1");
    if (!(min_child_weight > 0.0)) fail("min_child_weight must be positive");
    if (l2_regularization < 0.0) fail("l2_regularization must be >= 0");
    if (histogram_bins < 2) fail("histogram_bins must be >= 2");
    if (!(subsample > 0.0 && subsample <= 1.0)) fail("subsample must be in (0,1]");
    if (!(colsample > 0.0 && colsample <= 1.0)) fail("colsample must be in (0,1]");
    if (kind == ModelKind::mlp) {
        if (hidden_size < 1) fail("hidden_size must be >= 1");
        if (batch_size < 1) fail("batch_size must be >= 1");
        if (max_epochs < 1) fail("max_epochs must be >= 1");
        if (!(mlp_learning_rate > 0.0)) fail("mlp learning rate must be positive");
        if (patience < 1) fail("patience must be >= 1");
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
            fail("validation_fraction must be in [0,1)");
        }
    }
}

std::string TrainConfig::echo() const {
    std::ostringstream out;
    out << "kind=" << to_string(kind);
    switch (kind) {
        case ModelKind::gbdt:
            out << " growth_policy=" << to_string(growth_policy)
                << " n_estimators=" << n_estimators << " learning_rate=" << learning_rate;
            if (growth_policy == GrowthPolicy::level_wise) {
                out << " max_depth=" << max_depth;
            } else {
                out << " num_leaves=" << num_leaves;
            }
            out << " min_child_weight=" << min_child_weight
                << " l2_regularization=" << l2_regularization
                << " histogram_bins=" << histogram_bins << " subsample=" << subsample
                << " colsample=" << colsample;
            break;
        case ModelKind::rf:
            out << " n_estimators=" << n_estimators << " max_depth=" << max_depth
                << " bootstrap=" << (bootstrap ? "true" : "false");
            break;
        case ModelKind::mlp:
            out << " hidden_size=" << hidden_size << " batch_size=" << batch_size
                << " max_epochs=" << max_epochs
                << " mlp_learning_rate=" << mlp_learning_rate
                << " patience=" << patience;
            break;
    }
    out << " seed=" << seed;
    return out.str();
}

std::vector<double> AnyModel::predict_proba(const LabeledMatrix& rows) const {
    if (is_tree()) return ensemble().predict_proba(rows.values, rows.n_cols);
    return mlp().predict_proba(rows.values, rows.n_cols);
}

std::vector<int> AnyModel::classify(const LabeledMatrix& rows, double threshold) const {
    const auto probs = predict_proba(rows);
    std::vector<int> labels(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        labels[i] = probs[i] >= threshold ? 1 : 0;
    }
    return labels;
}

AnyModel train_model(const LabeledMatrix& train, const TrainConfig& config) {
    AnyModel out;
    out.config = config;
    switch (config.kind) {
        case ModelKind::gbdt: {
            TrainedGbdt trained = train_gbdt(train, config);
            out.loss_trace = std::move(trained.loss_trace);
            out.model = std::move(trained.ensemble);
            break;
        }
        case ModelKind::rf: {
            out.model = train_rf(train, config);
            break;
        }
        case ModelKind::mlp: {
            MlpModel trained = train_mlp(train, config);
            out.loss_trace = trained.loss_trace;
            out.model = std::move(trained);
            break;
        }
    }
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt + 0x9E3779B97F4A7C15ULL);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

CvResult kfold_grid_search(const LabeledMatrix& train,
                           const std::vector<TrainConfig>& grid, int k,
                           std::uint64_t seed) {
    if (grid.empty()) {
        throw Error(errc::invalid_argument, "grid search: empty config grid");
    }
    if (k < 2) throw Error(errc::invalid_argument, "grid search: k must be >= 2");
    const std::size_t n = train.n_rows();
    if (n < static_cast<std::size_t>(k)) {
        throw Error(errc::invalid_argument,
                    "grid search: fold would be smaller than 1 row (" +
                        std::to_string(n) + " rows, k=" + std::to_string(k) + ")");
    }

    CvResult result;
    result.grid = grid;
    result.fold_assignment.assign(n, 0);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    // contiguous chunks of the shuffled order; first n % k folds get one extra
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t at = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) {
            result.fold_assignment[order[at++]] = f;
        }
    }

    result.fold_f1.resize(grid.size());
    result.mean_f1.resize(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        result.fold_f1[c].resize(static_cast<std::size_t>(k));
        double sum = 0.0;
        std::size_t defined = 0;
        for (int f = 0; f < k; ++f) {
            std::vector<std::size_t> fit_idx, val_idx;
            for (std::size_t i = 0; i < n; ++i) {
                (result.fold_assignment[i] == f ? val_idx : fit_idx).push_back(i);
            }
            TrainConfig fold_config = grid[c];
            fold_config.seed = mix_seed(grid[c].seed, static_cast<std::uint64_t>(f));
            const AnyModel model = train_model(train.select(fit_idx), fold_config);
            const LabeledMatrix val = train.select(val_idx);
            const auto pred = model.classify(val);
            const auto cm = metrics::confusion(val.labels, pred);
            const auto f1 = metrics::f1(cm);
            result.fold_f1[c][static_cast<std::size_t>(f)] = f1;
            if (f1) {
                sum += *f1;
                ++defined;
            }
        }
        if (defined > 0) result.mean_f1[c] = sum / static_cast<double>(defined);
    }

    result.best_index = 0;
    double best_score = result.mean_f1[0] ? *result.mean_f1[0] : -1.0;
    for (std::size_t c = 1; c < grid.size(); ++c) {
        const double score = result.mean_f1[c] ? *result.mean_f1[c] : -1.0;
        if (score > best_score) {
            best_score = score;
            result.best_index = c;
        }
    }
    return result;
}

RunAggregate repeated_evaluate(const LabeledMatrix& matrix, TrainConfig config,
                               int n_runs, std::uint64_t base_seed,
                               double test_fraction) {
    if (n_runs < 2) {
        throw Error(errc::invalid_argument, "repeated_evaluate: n_runs must be >= 2");
    }
    RunAggregate out;
    for (int i = 0; i < n_runs; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        out.seeds.push_back(seed);
        const SplitResult split = split_train_test(matrix, test_fraction, seed);
        config.seed = seed;
        const AnyModel model = train_model(split.train, config);
        const auto pred = model.classify(split.test);
        out.runs.push_back(metrics::report(metrics::confusion(split.test.labels, pred)));
    }
    out.aggregated = metrics::aggregate_runs(out.runs);
    return out;
}

}  // namespace legigpt::models
