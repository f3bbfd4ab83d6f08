#include "core/forest.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace legigpt::models {

double gini_impurity(double count0, double count1) {
    const double n = count0 + count1;
    if (n <= 0.0) return 0.0;
    const double p0 = count0 / n;
    const double p1 = count1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

namespace {

constexpr double kMinGain = 1e-12;

struct RfSplit {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = true;

    bool valid() const { return feature >= 0; }
};

struct Builder {
    const LabeledMatrix& data;
    const TrainConfig& config;
    std::size_t features_per_split;
    Rng rng;
    Tree tree;

    // scratch, reused across nodes
    std::vector<std::pair<double, int>> sorted;

    int build(std::vector<std::uint32_t>& rows, int depth) {
        double c0 = 0.0, c1 = 0.0;
        for (const std::uint32_t r : rows) {
            (data.labels[r] == 1 ? c1 : c0) += 1.0;
        }
        const double n = c0 + c1;

        RfSplit split;
        if (depth < config.max_depth && c0 > 0.0 && c1 > 0.0 && rows.size() >= 2) {
            split = best_split(rows, c0, c1);
        }
        if (!split.valid()) {
            TreeNode leaf;
            leaf.feature = -1;
            leaf.value = c1 / n;
            leaf.cover = n;
            tree.nodes.push_back(leaf);
            return static_cast<int>(tree.nodes.size() - 1);
        }

        std::vector<std::uint32_t> lrows, rrows;
        for (const std::uint32_t r : rows) {
            const double v = data.row(r)[static_cast<std::size_t>(split.feature)];
            const bool go_left =
                is_missing(v) ? split.missing_left : v < split.threshold;
            (go_left ? lrows : rrows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const auto node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int left = build(lrows, depth + 1);
        const int right = build(rrows, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.default_left = split.missing_left;
        node.left = left;
        node.right = right;
        node.cover = tree.nodes[static_cast<std::size_t>(left)].cover +
                     tree.nodes[static_cast<std::size_t>(right)].cover;
        return node_index;
    }

    RfSplit best_split(const std::vector<std::uint32_t>& rows, double c0, double c1) {
        const double n = c0 + c1;
        const double parent_gini = gini_impurity(c0, c1);

        auto subset = rng.sample_without_replacement(data.n_cols, features_per_split);
        std::sort(subset.begin(), subset.end());

        RfSplit best;
        for (const std::size_t j : subset) {
            sorted.clear();
            double m0 = 0.0, m1 = 0.0;  // missing-value class counts
            for (const std::uint32_t r : rows) {
                const double v = data.row(r)[j];
                if (is_missing(v)) {
                    (data.labels[r] == 1 ? m1 : m0) += 1.0;
                } else {
                    sorted.emplace_back(v, data.labels[r]);
                }
            }
            if (sorted.size() < 2) continue;
            std::sort(sorted.begin(), sorted.end());

            double l0 = 0.0, l1 = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                (sorted[i].second == 1 ? l1 : l0) += 1.0;
                if (sorted[i].first == sorted[i + 1].first) continue;
                const double threshold =
                    sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
                for (const bool missing_left : {true, false}) {
                    const double cl0 = missing_left ? l0 + m0 : l0;
                    const double cl1 = missing_left ? l1 + m1 : l1;
                    const double cr0 = c0 - cl0;
                    const double cr1 = c1 - cl1;
                    const double nl = cl0 + cl1;
                    const double nr = cr0 + cr1;
                    if (nl < 1.0 || nr < 1.0) continue;
                    const double gain = parent_gini -
                                        (nl / n) * gini_impurity(cl0, cl1) -
                                        (nr / n) * gini_impurity(cr0, cr1);
                    if (gain > best.gain) {
                        best.gain = gain;
                        best.feature = static_cast<int>(j);
                        best.threshold = threshold;
                        best.missing_left = missing_left;
                    }
                }
            }
        }
        if (best.valid() && best.gain <= kMinGain) best = RfSplit{};
        return best;
    }
};

}  // namespace

TreeEnsemble train_rf(const LabeledMatrix& train, const TrainConfig& config) {
    config.validate();
    if (config.kind != ModelKind::rf) {
        throw Error(errc::invalid_argument, "train_rf: config.kind must be rf");
    }
    const std::size_t n = train.n_rows();
    if (n == 0) throw Error(errc::invalid_argument, "train_rf: empty training set");
    for (const int y : train.labels) {
        if (y != 0 && y != 1) {
            throw Error(errc::invalid_argument, "train_rf: labels must be binary");
        }
    }

    const auto features_per_split = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(train.n_cols))));

    TreeEnsemble ensemble;
    ensemble.objective = Objective::classification_forest;
    ensemble.n_features = train.n_cols;
    ensemble.base_score = 0.0;

    Rng root_rng(config.seed);
    for (int t = 0; t < config.n_estimators; ++t) {
        Rng tree_rng = root_rng.child(static_cast<std::uint64_t>(t));
        std::vector<std::uint32_t> rows;
        rows.reserve(n);
        if (config.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) {
                rows.push_back(static_cast<std::uint32_t>(tree_rng.uniform_index(n)));
            }
            std::sort(rows.begin(), rows.end());
        } else {
            for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(i));
        }
        Builder builder{train, config, features_per_split, std::move(tree_rng), Tree{}, {}};
        builder.build(rows, 0);
        ensemble.trees.push_back(std::move(builder.tree));
    }
    return ensemble;
}

}  // namespace legigpt::models
