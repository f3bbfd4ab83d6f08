#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace legigpt::models {

/// Missing feature values travel as quiet NaN and are routed through each
/// split's learned default direction.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// One node of a binary decision tree, stored in a flat array.
/// Internal nodes split on `x[feature] < threshold` (left on true);
/// leaves have feature == -1 and carry `value`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    bool default_left = true;
    double value = 0.0;
    double cover = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
    /// Cover-weighted expectation of the leaf values.
    double expected_value() const;
    std::size_t leaf_count() const;
    std::size_t max_depth() const;
};

enum class Objective { logistic_boost, classification_forest };

const char* to_string(Objective o);

/// Additive ensemble shared by the boosted and bagged learners.
/// logistic_boost: raw output = base_score + sum of tree outputs
///   (learning rate already folded into leaf values), probability via
///   sigmoid.
/// classification_forest: raw output = mean of per-tree positive-class
///   frequencies, which is itself the probability.
struct TreeEnsemble {
    std::vector<Tree> trees;
    double base_score = 0.0;
    Objective objective = Objective::logistic_boost;
    std::size_t n_features = 0;

    /// Contribution weight of each tree to the raw output.
    double tree_weight() const {
        return objective == Objective::classification_forest && !trees.empty()
                   ? 1.0 / static_cast<double>(trees.size())
                   : 1.0;
    }

    double raw_output(std::span<const double> row) const;
    double predict_proba_row(std::span<const double> row) const;

    std::vector<double> predict_proba(const std::vector<double>& rows,
                                      std::size_t n_cols) const;
    std::vector<int> classify(const std::vector<double>& rows, std::size_t n_cols,
                              double threshold = 0.5) const;
};

/// Self-describing text serialization. `config_echo` is stored verbatim on
/// one line and returned by parse.
std::string serialize_ensemble(const TreeEnsemble& ensemble,
                               const std::string& config_echo);

struct ParsedEnsemble {
    TreeEnsemble ensemble;
    std::string config_echo;
};

ParsedEnsemble parse_ensemble(std::string_view text);

void save_ensemble(const std::filesystem::path& path, const TreeEnsemble& ensemble,
                   const std::string& config_echo);
ParsedEnsemble load_ensemble(const std::filesystem::path& path);

}  // namespace legigpt::models
