#pragma once

#include "core/dataset.hpp"
#include "core/train_config.hpp"
#include "core/tree.hpp"

namespace legigpt::models {

/// Gini impurity of a two-class node; (5,5) -> 0.5, (10,0) -> 0.
double gini_impurity(double count0, double count1);

/// Bagged classification forest: bootstrap-sampled trees, a random
/// ceil(sqrt(d))-sized feature subset per split, Gini split selection,
/// depth capped at max_depth. Leaves hold the positive-class frequency;
/// the ensemble prediction is the mean over trees. Missing values follow
/// the per-split direction with the better impurity decrease.
TreeEnsemble train_rf(const LabeledMatrix& train, const TrainConfig& config);

}  // namespace legigpt::models
