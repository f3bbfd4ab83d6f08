#pragma once

#include <vector>

#include "core/dataset.hpp"
#include "core/train_config.hpp"
#include "core/tree.hpp"

namespace legigpt::models {

struct TrainedGbdt {
    TreeEnsemble ensemble;
    /// loss_trace[0] is the loss at initialization (base score only), then
    /// one entry per boosting round.
    std::vector<double> loss_trace;
};

/// Second-order gradient boosting on logistic loss. Split candidates come
/// from per-feature histograms (at most histogram_bins bins, built once on
/// the training split); missing values are routed through the direction
/// with the higher gain. Leaf values carry the learning rate already
/// applied: value = -learning_rate * G / (H + lambda).
TrainedGbdt train_gbdt(const LabeledMatrix& train, const TrainConfig& config);

}  // namespace legigpt::models
