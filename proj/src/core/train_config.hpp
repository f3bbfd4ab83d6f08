#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace legigpt::models {

enum class ModelKind { mlp, rf, gbdt };

/// level_wise grows depth-bounded trees with second-order gain (the
/// depth-capped boosting variant); leaf_wise grows best-gain-first trees
/// bounded by leaf count. Exactly one of max_depth / num_leaves binds,
/// depending on the policy.
enum class GrowthPolicy { level_wise, leaf_wise };

const char* to_string(ModelKind k);
const char* to_string(GrowthPolicy g);
ModelKind parse_model_kind(std::string_view s);
GrowthPolicy parse_growth_policy(std::string_view s);

struct TrainConfig {
    ModelKind kind = ModelKind::gbdt;
    GrowthPolicy growth_policy = GrowthPolicy::level_wise;
    int n_estimators = 500;
    double learning_rate = 0.15;
    int max_depth = 16;
    int num_leaves = 16;
    double min_child_weight = 1.0;
    double l2_regularization = 1.0;
    int histogram_bins = 256;
    double subsample = 1.0;
    double colsample = 1.0;
    std::uint64_t seed = 42;

    // forest specifics
    bool bootstrap = true;

    // mlp specifics
    int hidden_size = 16;
    int batch_size = 32;
    int max_epochs = 500;
    double mlp_learning_rate = 1e-3;
    int patience = 20;
    double validation_fraction = 0.1;

    void validate() const;  // throws invalid_argument on bad values

    /// Single-line key=value summary for run manifests and model files.
    std::string echo() const;
};

}  // namespace legigpt::models
