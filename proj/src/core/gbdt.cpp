#include "core/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace legigpt::models {

namespace {

constexpr std::uint16_t kMissingBin = 0xFFFF;
constexpr double kMinGain = 1e-12;

struct BinnedFeatures {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::vector<double>> thresholds;  // ascending midpoints per feature
    std::vector<std::uint16_t> bins;              // row-major; kMissingBin for NaN

    std::uint16_t bin(std::size_t row, std::size_t col) const {
        return bins[row * n_cols + col];
    }
};

BinnedFeatures build_bins(const LabeledMatrix& data, int max_bins) {
    BinnedFeatures out;
    out.n_rows = data.n_rows();
    out.n_cols = data.n_cols;
    out.thresholds.resize(data.n_cols);
    out.bins.assign(out.n_rows * out.n_cols, kMissingBin);

    std::vector<double> vals;
    for (std::size_t j = 0; j < data.n_cols; ++j) {
        vals.clear();
        for (std::size_t i = 0; i < out.n_rows; ++i) {
            const double v = data.row(i)[j];
            if (!is_missing(v)) vals.push_back(v);
        }
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        auto& thr = out.thresholds[j];
        const std::size_t u = vals.size();
        if (u >= 2) {
            if (u <= static_cast<std::size_t>(max_bins)) {
                thr.reserve(u - 1);
                for (std::size_t i = 0; i + 1 < u; ++i) {
                    thr.push_back(vals[i] + (vals[i + 1] - vals[i]) / 2.0);
                }
            } else {
                // equal-frequency cut points over the unique values
                for (int k = 1; k < max_bins; ++k) {
                    const std::size_t r =
                        static_cast<std::size_t>(k) * u / static_cast<std::size_t>(max_bins);
                    if (r == 0 || r >= u) continue;
                    thr.push_back(vals[r - 1] + (vals[r] - vals[r - 1]) / 2.0);
                }
                thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
            }
        }
        for (std::size_t i = 0; i < out.n_rows; ++i) {
            const double v = data.row(i)[j];
            if (is_missing(v)) continue;
            const auto it = std::upper_bound(thr.begin(), thr.end(), v);
            out.bins[i * out.n_cols + j] =
                static_cast<std::uint16_t>(it - thr.begin());
        }
    }
    return out;
}

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    int threshold_index = -1;
    bool missing_left = true;
    double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;

    bool valid() const { return feature >= 0; }
};

double leaf_score(double g, double h, double lambda) {
    return (g * g) / (h + lambda);
}

/// Best histogram split over the given feature subset. Ties resolve to the
/// lowest feature index, then the lowest threshold, then missing-left.
SplitCandidate find_best_split(const BinnedFeatures& binned,
                               const std::vector<std::uint32_t>& rows,
                               const std::vector<double>& grad,
                               const std::vector<double>& hess, double g_total,
                               double h_total, const std::vector<std::size_t>& features,
                               double lambda, double min_child_weight) {
    SplitCandidate best;
    const double parent_score = leaf_score(g_total, h_total, lambda);

    std::vector<double> gh;  // interleaved g,h per bin
    for (const std::size_t j : features) {
        const auto& thr = binned.thresholds[j];
        if (thr.empty()) continue;
        const std::size_t n_bins = thr.size() + 1;
        gh.assign(2 * n_bins, 0.0);
        double g_miss = 0.0, h_miss = 0.0;
        for (const std::uint32_t r : rows) {
            const std::uint16_t b = binned.bin(r, j);
            if (b == kMissingBin) {
                g_miss += grad[r];
                h_miss += hess[r];
            } else {
                gh[2 * b] += grad[r];
                gh[2 * b + 1] += hess[r];
            }
        }
        double gl = 0.0, hl = 0.0;
        for (std::size_t k = 0; k + 1 < n_bins; ++k) {
            gl += gh[2 * k];
            hl += gh[2 * k + 1];
            for (const bool missing_left : {true, false}) {
                const double cgl = missing_left ? gl + g_miss : gl;
                const double chl = missing_left ? hl + h_miss : hl;
                const double cgr = g_total - cgl;
                const double chr = h_total - chl;
                if (chl < min_child_weight || chr < min_child_weight) continue;
                const double gain =
                    0.5 * (leaf_score(cgl, chl, lambda) + leaf_score(cgr, chr, lambda) -
                           parent_score);
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = static_cast<int>(j);
                    best.threshold_index = static_cast<int>(k);
                    best.missing_left = missing_left;
                    best.gl = cgl;
                    best.hl = chl;
                    best.gr = cgr;
                    best.hr = chr;
                }
            }
        }
    }
    if (best.valid() && best.gain <= kMinGain) best = SplitCandidate{};
    return best;
}

void partition_rows(const BinnedFeatures& binned, const std::vector<std::uint32_t>& rows,
                    const SplitCandidate& split, std::vector<std::uint32_t>& left,
                    std::vector<std::uint32_t>& right) {
    left.clear();
    right.clear();
    for (const std::uint32_t r : rows) {
        const std::uint16_t b =
            binned.bin(r, static_cast<std::size_t>(split.feature));
        const bool go_left = b == kMissingBin
                                 ? split.missing_left
                                 : b <= static_cast<std::uint16_t>(split.threshold_index);
        (go_left ? left : right).push_back(r);
    }
}

double fix_covers(Tree& tree, int at) {
    TreeNode& n = tree.nodes[static_cast<std::size_t>(at)];
    if (n.is_leaf()) return n.cover;
    n.cover = fix_covers(tree, n.left) + fix_covers(tree, n.right);
    return n.cover;
}

double mean_logloss(const LabeledMatrix& data, const std::vector<double>& margin) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        const double z = margin[i];
        const double y = data.labels[i];
        // softplus(z) - y*z, numerically stable
        total += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    }
    return total / static_cast<double>(data.n_rows());
}

struct LeafWiseItem {
    double gain;
    std::uint64_t seq;
    int node_id;
    int depth;
    SplitCandidate split;
    std::vector<std::uint32_t> rows;
    double g, h;
};

struct LeafWiseOrder {
    bool operator()(const LeafWiseItem& a, const LeafWiseItem& b) const {
        if (a.gain != b.gain) return a.gain < b.gain;  // max-heap on gain
        return a.seq > b.seq;                          // then earliest node
    }
};

}  // namespace

TrainedGbdt train_gbdt(const LabeledMatrix& train, const TrainConfig& config) {
    config.validate();
    if (config.kind != ModelKind::gbdt) {
        throw Error(errc::invalid_argument, "train_gbdt: config.kind must be gbdt");
    }
    const std::size_t n = train.n_rows();
    if (n == 0) throw Error(errc::invalid_argument, "train_gbdt: empty training set");
    for (const int y : train.labels) {
        if (y != 0 && y != 1) {
            throw Error(errc::invalid_argument, "train_gbdt: labels must be binary");
        }
    }

    const BinnedFeatures binned = build_bins(train, config.histogram_bins);
    const double lambda = config.l2_regularization;
    const double lr = config.learning_rate;

    TrainedGbdt out;
    out.ensemble.objective = Objective::logistic_boost;
    out.ensemble.n_features = train.n_cols;

    // Smoothed prior keeps the base score finite on one-class data.
    double label_sum = 0.0;
    for (const int y : train.labels) label_sum += y;
    const double prior = (label_sum + 0.5) / (static_cast<double>(n) + 1.0);
    out.ensemble.base_score = std::log(prior / (1.0 - prior));

    std::vector<double> margin(n, out.ensemble.base_score);
    std::vector<double> grad(n), hess(n);
    out.loss_trace.push_back(mean_logloss(train, margin));

    Rng rng(config.seed);
    std::vector<std::size_t> all_features(train.n_cols);
    for (std::size_t j = 0; j < train.n_cols; ++j) all_features[j] = j;

    for (int round = 0; round < config.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - static_cast<double>(train.labels[i]);
            hess[i] = p * (1.0 - p);
        }

        Rng tree_rng = rng.child(static_cast<std::uint64_t>(round));
        std::vector<std::uint32_t> rows;
        if (config.subsample < 1.0) {
            const auto take = static_cast<std::size_t>(
                std::max(1.0, std::floor(config.subsample * static_cast<double>(n))));
            auto picked = tree_rng.sample_without_replacement(n, take);
            std::sort(picked.begin(), picked.end());
            rows.assign(picked.begin(), picked.end());
        } else {
            rows.resize(n);
            for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
        }
        std::vector<std::size_t> features = all_features;
        if (config.colsample < 1.0) {
            const auto take = static_cast<std::size_t>(std::max(
                1.0, std::floor(config.colsample * static_cast<double>(train.n_cols))));
            auto picked = tree_rng.sample_without_replacement(train.n_cols, take);
            std::sort(picked.begin(), picked.end());
            features = picked;
        }

        double g_total = 0.0, h_total = 0.0;
        for (const std::uint32_t r : rows) {
            g_total += grad[r];
            h_total += hess[r];
        }

        Tree tree;
        auto make_leaf = [&](double g, double h) {
            TreeNode leaf;
            leaf.feature = -1;
            leaf.value = -lr * g / (h + lambda);
            leaf.cover = h;
            tree.nodes.push_back(leaf);
            return static_cast<int>(tree.nodes.size() - 1);
        };

        if (config.growth_policy == GrowthPolicy::level_wise) {
            struct Task {
                int node_id;
                std::vector<std::uint32_t> rows;
                double g, h;
                int depth;
            };
            std::vector<Task> level;
            level.push_back({make_leaf(g_total, h_total), rows, g_total, h_total, 0});
            while (!level.empty()) {
                std::vector<Task> next;
                for (auto& task : level) {
                    if (task.depth >= config.max_depth) continue;
                    const SplitCandidate split =
                        find_best_split(binned, task.rows, grad, hess, task.g, task.h,
                                        features, lambda, config.min_child_weight);
                    if (!split.valid()) continue;
                    std::vector<std::uint32_t> lrows, rrows;
                    partition_rows(binned, task.rows, split, lrows, rrows);
                    const int left = make_leaf(split.gl, split.hl);
                    const int right = make_leaf(split.gr, split.hr);
                    TreeNode& parent = tree.nodes[static_cast<std::size_t>(task.node_id)];
                    parent.feature = split.feature;
                    parent.threshold =
                        binned.thresholds[static_cast<std::size_t>(split.feature)]
                                         [static_cast<std::size_t>(split.threshold_index)];
                    parent.default_left = split.missing_left;
                    parent.left = left;
                    parent.right = right;
                    next.push_back({left, std::move(lrows), split.gl, split.hl, task.depth + 1});
                    next.push_back({right, std::move(rrows), split.gr, split.hr, task.depth + 1});
                }
                level = std::move(next);
            }
        } else {
            std::priority_queue<LeafWiseItem, std::vector<LeafWiseItem>, LeafWiseOrder> heap;
            std::uint64_t seq = 0;
            const int root = make_leaf(g_total, h_total);
            auto try_push = [&](int node_id, std::vector<std::uint32_t>&& node_rows,
                                double g, double h, int depth) {
                SplitCandidate split =
                    find_best_split(binned, node_rows, grad, hess, g, h, features,
                                    lambda, config.min_child_weight);
                if (!split.valid()) return;
                heap.push({split.gain, seq++, node_id, depth, std::move(split),
                           std::move(node_rows), g, h});
            };
            try_push(root, std::move(rows), g_total, h_total, 0);
            int n_leaves = 1;
            while (n_leaves < config.num_leaves && !heap.empty()) {
                LeafWiseItem item = heap.top();
                heap.pop();
                std::vector<std::uint32_t> lrows, rrows;
                partition_rows(binned, item.rows, item.split, lrows, rrows);
                const int left = make_leaf(item.split.gl, item.split.hl);
                const int right = make_leaf(item.split.gr, item.split.hr);
                TreeNode& parent = tree.nodes[static_cast<std::size_t>(item.node_id)];
                parent.feature = item.split.feature;
                parent.threshold =
                    binned.thresholds[static_cast<std::size_t>(item.split.feature)]
                                     [static_cast<std::size_t>(item.split.threshold_index)];
                parent.default_left = item.split.missing_left;
                parent.left = left;
                parent.right = right;
                ++n_leaves;
                try_push(left, std::move(lrows), item.split.gl, item.split.hl,
                         item.depth + 1);
                try_push(right, std::move(rrows), item.split.gr, item.split.hr,
                         item.depth + 1);
            }
        }

        fix_covers(tree, 0);
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += tree.predict(train.row(i));
        }
        out.ensemble.trees.push_back(std::move(tree));
        out.loss_trace.push_back(mean_logloss(train, margin));
    }
    return out;
}

}  // namespace legigpt::models
