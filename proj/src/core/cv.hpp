#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/mlp.hpp"
#include "core/train_config.hpp"
#include "core/tree.hpp"

namespace legigpt::models {

/// A trained predictor of any of the three kinds, with its config and
/// training-loss trace.
struct AnyModel {
    TrainConfig config;
    std::variant<TreeEnsemble, MlpModel> model;
    std::vector<double> loss_trace;

    bool is_tree() const { return std::holds_alternative<TreeEnsemble>(model); }
    const TreeEnsemble& ensemble() const { return std::get<TreeEnsemble>(model); }
    const MlpModel& mlp() const { return std::get<MlpModel>(model); }

    std::vector<double> predict_proba(const LabeledMatrix& rows) const;
    std::vector<int> classify(const LabeledMatrix& rows, double threshold = 0.5) const;
};

AnyModel train_model(const LabeledMatrix& train, const TrainConfig& config);

struct CvResult {
    std::vector<TrainConfig> grid;
    std::vector<int> fold_assignment;                        // per training row
    std::vector<std::vector<std::optional<double>>> fold_f1; // [config][fold]
    std::vector<std::optional<double>> mean_f1;              // per config
    std::size_t best_index = 0;

    const TrainConfig& best() const { return grid[best_index]; }
};

/// Grid search with seeded k-fold cross-validation. The fold partition is
/// drawn once and shared by every config; the selected config maximizes
/// mean validation F1, ties going to the earlier grid entry.
CvResult kfold_grid_search(const LabeledMatrix& train,
                           const std::vector<TrainConfig>& grid, int k,
                           std::uint64_t seed);

struct RunAggregate {
    std::vector<metrics::MetricsReport> runs;
    metrics::AggregatedMetrics aggregated;
    std::vector<std::uint64_t> seeds;
};

/// Repeated train/test evaluation: run i splits and trains with seed
/// base_seed + i, and metrics aggregate with t-based 95% intervals.
RunAggregate repeated_evaluate(const LabeledMatrix& matrix, TrainConfig config,
                               int n_runs, std::uint64_t base_seed,
                               double test_fraction);

}  // namespace legigpt::models
