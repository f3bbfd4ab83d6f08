#include "core/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "core/errors.hpp"

namespace legigpt::shap {

using models::is_missing;
using models::Tree;
using models::TreeEnsemble;
using models::TreeNode;

namespace {

void check_covers(const TreeEnsemble& ensemble) {
    for (const auto& tree : ensemble.trees) {
        for (const auto& n : tree.nodes) {
            if (!n.is_leaf() && !(n.cover > 0.0)) {
                throw Error(errc::invalid_argument,
                            "attribution: internal node with non-positive cover");
            }
        }
    }
}

// Decomposition of the conditional expectation into per-feature Shapley
// terms via the permutation-weight bookkeeping carried along each
// root-to-leaf path. `one_fraction` tracks whether the row itself follows
// the branch, `zero_fraction` the cover proportion flowing there when the
// split feature is not conditioned on.
struct PathElement {
    int feature_index = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double pweight = 0.0;
};

void extend_path(PathElement* path, unsigned depth, double zero_fraction,
                 double one_fraction, int feature_index) {
    path[depth].feature_index = feature_index;
    path[depth].zero_fraction = zero_fraction;
    path[depth].one_fraction = one_fraction;
    path[depth].pweight = depth == 0 ? 1.0 : 0.0;
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        path[i + 1].pweight += one_fraction * path[i].pweight *
                               static_cast<double>(i + 1) /
                               static_cast<double>(depth + 1);
        path[i].pweight = zero_fraction * path[i].pweight *
                          static_cast<double>(depth - static_cast<unsigned>(i)) /
                          static_cast<double>(depth + 1);
    }
}

void unwind_path(PathElement* path, unsigned depth, unsigned index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            const double tmp = path[i].pweight;
            path[i].pweight = next_one_portion * static_cast<double>(depth + 1) /
                              (static_cast<double>(i + 1) * one_fraction);
            next_one_portion =
                tmp - path[i].pweight * zero_fraction *
                          static_cast<double>(depth - static_cast<unsigned>(i)) /
                          static_cast<double>(depth + 1);
        } else {
            path[i].pweight = path[i].pweight * static_cast<double>(depth + 1) /
                              (zero_fraction *
                               static_cast<double>(depth - static_cast<unsigned>(i)));
        }
    }
    for (unsigned i = index; i < depth; ++i) {
        path[i].feature_index = path[i + 1].feature_index;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

double unwound_path_sum(const PathElement* path, unsigned depth, unsigned index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    double total = 0.0;
    if (one_fraction != 0.0) {
        for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
            const double tmp = next_one_portion * static_cast<double>(depth + 1) /
                               (static_cast<double>(i + 1) * one_fraction);
            total += tmp;
            next_one_portion =
                path[i].pweight - tmp * zero_fraction *
                                      static_cast<double>(depth - static_cast<unsigned>(i)) /
                                      static_cast<double>(depth + 1);
        }
    } else {
        for (int i = static_cast<int>(depth) - 1; i >= 0; --i) {
            total += path[i].pweight * static_cast<double>(depth + 1) /
                     (zero_fraction *
                      static_cast<double>(depth - static_cast<unsigned>(i)));
        }
    }
    return total;
}

void shap_recurse(const Tree& tree, std::span<const double> row, double* phi,
                  int node_index, unsigned unique_depth,
                  PathElement* parent_unique_path, double parent_zero_fraction,
                  double parent_one_fraction, int parent_feature_index) {
    PathElement* unique_path = parent_unique_path + unique_depth + 1;
    std::copy(parent_unique_path, parent_unique_path + unique_depth + 1, unique_path);
    extend_path(unique_path, unique_depth, parent_zero_fraction, parent_one_fraction,
                parent_feature_index);

    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];

    if (node.is_leaf()) {
        for (unsigned i = 1; i <= unique_depth; ++i) {
            const double w = unwound_path_sum(unique_path, unique_depth, i);
            const PathElement& el = unique_path[i];
            phi[el.feature_index] += w * (el.one_fraction - el.zero_fraction) * node.value;
        }
        return;
    }

    const double v = row[static_cast<std::size_t>(node.feature)];
    int hot;
    if (is_missing(v)) {
        hot = node.default_left ? node.left : node.right;
    } else {
        hot = v < node.threshold ? node.left : node.right;
    }
    const int cold = hot == node.left ? node.right : node.left;

    const double hot_zero_fraction =
        tree.nodes[static_cast<std::size_t>(hot)].cover / node.cover;
    const double cold_zero_fraction =
        tree.nodes[static_cast<std::size_t>(cold)].cover / node.cover;
    double incoming_zero_fraction = 1.0;
    double incoming_one_fraction = 1.0;

    // A split on a feature already on the path replaces the earlier
    // occurrence; undo it and fold its fractions into this one.
    unsigned path_index = 0;
    for (; path_index <= unique_depth; ++path_index) {
        if (unique_path[path_index].feature_index == node.feature) break;
    }
    if (path_index != unique_depth + 1) {
        incoming_zero_fraction = unique_path[path_index].zero_fraction;
        incoming_one_fraction = unique_path[path_index].one_fraction;
        unwind_path(unique_path, unique_depth, path_index);
        unique_depth -= 1;
    }

    shap_recurse(tree, row, phi, hot, unique_depth + 1, unique_path,
                 hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
                 node.feature);
    shap_recurse(tree, row, phi, cold, unique_depth + 1, unique_path,
                 cold_zero_fraction * incoming_zero_fraction, 0.0, node.feature);
}

void tree_shap_single(const Tree& tree, std::span<const double> row, double* phi) {
    const std::size_t depth = tree.max_depth() + 2;
    std::vector<PathElement> buffer((depth * (depth + 1)) / 2 + depth + 1);
    shap_recurse(tree, row, phi, 0, 0, buffer.data(), 1.0, 1.0, -1);
}

}  // namespace

RowAttribution tree_shap(const TreeEnsemble& ensemble, std::span<const double> row) {
    if (row.size() != ensemble.n_features) {
        throw Error(errc::invalid_argument,
                    "attribution: row width " + std::to_string(row.size()) +
                        " does not match " + std::to_string(ensemble.n_features) +
                        " model features");
    }
    check_covers(ensemble);

    RowAttribution out;
    out.attributions.assign(ensemble.n_features, 0.0);
    out.base_value = ensemble.base_score;
    const double w = ensemble.tree_weight();

    std::vector<double> tree_phi(ensemble.n_features);
    for (const auto& tree : ensemble.trees) {
        std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
        tree_shap_single(tree, row, tree_phi.data());
        for (std::size_t j = 0; j < ensemble.n_features; ++j) {
            out.attributions[j] += w * tree_phi[j];
        }
        out.base_value += w * tree.expected_value();
    }
    return out;
}

namespace {

double tree_cond_exp(const Tree& tree, int node_index, std::span<const double> row,
                     const std::vector<int>& feature_bit, std::uint64_t fixed_mask) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) return node.value;
    const int bit = feature_bit[static_cast<std::size_t>(node.feature)];
    const bool fixed = bit >= 0 && (fixed_mask >> bit) & 1U;
    if (fixed) {
        const double v = row[static_cast<std::size_t>(node.feature)];
        int next;
        if (is_missing(v)) {
            next = node.default_left ? node.left : node.right;
        } else {
            next = v < node.threshold ? node.left : node.right;
        }
        return tree_cond_exp(tree, next, row, feature_bit, fixed_mask);
    }
    const double wl = tree.nodes[static_cast<std::size_t>(node.left)].cover / node.cover;
    const double wr = tree.nodes[static_cast<std::size_t>(node.right)].cover / node.cover;
    return wl * tree_cond_exp(tree, node.left, row, feature_bit, fixed_mask) +
           wr * tree_cond_exp(tree, node.right, row, feature_bit, fixed_mask);
}

std::vector<std::size_t> active_features(const TreeEnsemble& ensemble) {
    std::vector<std::size_t> act;
    for (const auto& tree : ensemble.trees) {
        for (const auto& n : tree.nodes) {
            if (!n.is_leaf()) act.push_back(static_cast<std::size_t>(n.feature));
        }
    }
    std::sort(act.begin(), act.end());
    act.erase(std::unique(act.begin(), act.end()), act.end());
    return act;
}

double ensemble_cond_exp(const TreeEnsemble& ensemble, std::span<const double> row,
                         const std::vector<int>& feature_bit, std::uint64_t mask) {
    double total = ensemble.base_score;
    const double w = ensemble.tree_weight();
    for (const auto& tree : ensemble.trees) {
        total += w * tree_cond_exp(tree, 0, row, feature_bit, mask);
    }
    return total;
}

}  // namespace

double conditional_expectation(const TreeEnsemble& ensemble, std::span<const double> row,
                               const std::vector<std::size_t>& active,
                               std::uint64_t fixed_mask) {
    std::vector<int> feature_bit(ensemble.n_features, -1);
    for (std::size_t i = 0; i < active.size(); ++i) {
        feature_bit[active[i]] = static_cast<int>(i);
    }
    return ensemble_cond_exp(ensemble, row, feature_bit, fixed_mask);
}

std::vector<double> brute_force_shap(const TreeEnsemble& ensemble,
                                     std::span<const double> row,
                                     std::size_t max_active) {
    if (row.size() != ensemble.n_features) {
        throw Error(errc::invalid_argument, "brute_force_shap: row width mismatch");
    }
    check_covers(ensemble);
    const auto active = active_features(ensemble);
    const std::size_t a = active.size();
    if (a > max_active) {
        throw Error(errc::invalid_argument,
                    "brute_force_shap: " + std::to_string(a) +
                        " active features exceed the guard of " +
                        std::to_string(max_active));
    }

    std::vector<int> feature_bit(ensemble.n_features, -1);
    for (std::size_t i = 0; i < a; ++i) feature_bit[active[i]] = static_cast<int>(i);

    const std::uint64_t n_masks = 1ULL << a;
    std::vector<double> value(n_masks);
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
        value[mask] = ensemble_cond_exp(ensemble, row, feature_bit, mask);
    }

    std::vector<double> factorial(a + 1, 1.0);
    for (std::size_t i = 1; i <= a; ++i) {
        factorial[i] = factorial[i - 1] * static_cast<double>(i);
    }

    std::vector<double> phi(ensemble.n_features, 0.0);
    for (std::size_t bit = 0; bit < a; ++bit) {
        const std::uint64_t j_mask = 1ULL << bit;
        double sum = 0.0;
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            if (mask & j_mask) continue;
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            const double weight =
                factorial[s] * factorial[a - s - 1] / factorial[a];
            sum += weight * (value[mask | j_mask] - value[mask]);
        }
        phi[active[bit]] = sum;
    }
    return phi;
}

ShapMatrix shap_matrix(const TreeEnsemble& ensemble, const models::LabeledMatrix& rows) {
    ShapMatrix out;
    out.n_cols = ensemble.n_features;
    out.row_ids = rows.row_ids;
    out.values.reserve(rows.n_rows() * ensemble.n_features);
    bool first = true;
    for (std::size_t i = 0; i < rows.n_rows(); ++i) {
        RowAttribution attr = tree_shap(ensemble, rows.row(i));
        if (first) {
            out.base_value = attr.base_value;
            first = false;
        }
        out.values.insert(out.values.end(), attr.attributions.begin(),
                          attr.attributions.end());
    }
    if (first) {
        // no rows: the base value is still well defined
        out.base_value = ensemble.base_score;
        const double w = ensemble.tree_weight();
        for (const auto& tree : ensemble.trees) {
            out.base_value += w * tree.expected_value();
        }
    }
    return out;
}

std::vector<ImportanceEntry> importance_ranking(
    const ShapMatrix& matrix, const std::vector<std::string>& feature_names) {
    if (matrix.n_rows() == 0) {
        throw Error(errc::invalid_argument, "importance_ranking: empty matrix");
    }
    std::vector<ImportanceEntry> entries(matrix.n_cols);
    for (std::size_t j = 0; j < matrix.n_cols; ++j) {
        entries[j].feature = j;
        entries[j].name = j < feature_names.size() ? feature_names[j]
                                                   : "f" + std::to_string(j + 1);
    }
    for (std::size_t i = 0; i < matrix.n_rows(); ++i) {
        const auto row = matrix.row(i);
        for (std::size_t j = 0; j < matrix.n_cols; ++j) {
            entries[j].mean_abs_shap += std::abs(row[j]);
        }
    }
    const double n = static_cast<double>(matrix.n_rows());
    for (auto& e : entries) e.mean_abs_shap /= n;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                         return a.mean_abs_shap > b.mean_abs_shap;
                     });
    return entries;
}

CorrelationMatrix shap_correlation(const ShapMatrix& matrix) {
    const std::size_t n_rows = matrix.n_rows();
    if (n_rows < 2) {
        throw Error(errc::invalid_argument, "shap_correlation: needs at least 2 rows");
    }
    const std::size_t d = matrix.n_cols;
    CorrelationMatrix out;
    out.n = d;
    out.values.assign(d * d, std::numeric_limits<double>::quiet_NaN());
    out.defined.assign(d * d, false);

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto row = matrix.row(i);
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n_rows);

    std::vector<double> ss(d, 0.0);
    std::vector<double> cross(d * d, 0.0);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto row = matrix.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double dj = row[j] - mean[j];
            ss[j] += dj * dj;
            for (std::size_t k = j; k < d; ++k) {
                cross[j * d + k] += dj * (row[k] - mean[k]);
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = j; k < d; ++k) {
            if (ss[j] > 0.0 && ss[k] > 0.0) {
                double r = cross[j * d + k] / std::sqrt(ss[j] * ss[k]);
                r = std::clamp(r, -1.0, 1.0);
                out.values[j * d + k] = out.values[k * d + j] = r;
                out.defined[j * d + k] = out.defined[k * d + j] = true;
            }
        }
    }
    return out;
}

DependenceSeries dependence_series(const ShapMatrix& shap,
                                   const models::LabeledMatrix& rows,
                                   std::size_t feature) {
    if (feature >= shap.n_cols || shap.n_cols != rows.n_cols ||
        shap.n_rows() != rows.n_rows()) {
        throw Error(errc::invalid_argument, "dependence_series: shape mismatch");
    }
    DependenceSeries out;
    out.feature = feature;
    out.name = feature < rows.column_names.size() ? rows.column_names[feature]
                                                  : "f" + std::to_string(feature + 1);
    out.points.reserve(rows.n_rows());
    for (std::size_t i = 0; i < rows.n_rows(); ++i) {
        DependencePoint p;
        p.bill_id = rows.row_ids[i].first;
        p.legislator_id = rows.row_ids[i].second;
        p.feature_value = rows.row(i)[feature];
        p.shap_value = shap.row(i)[feature];
        p.missing = is_missing(p.feature_value);
        out.points.push_back(std::move(p));
    }
    return out;
}

std::vector<DependenceBucket> bucketed_means(const DependenceSeries& series,
                                             std::size_t n_buckets) {
    if (n_buckets == 0) {
        throw Error(errc::invalid_argument, "bucketed_means: need at least one bucket");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : series.points) {
        if (p.missing) continue;
        lo = std::min(lo, p.feature_value);
        hi = std::max(hi, p.feature_value);
    }
    std::vector<DependenceBucket> buckets;
    if (!(lo <= hi)) return buckets;  // no non-missing points

    const double width = hi > lo ? (hi - lo) / static_cast<double>(n_buckets) : 1.0;
    std::vector<DependenceBucket> all(n_buckets);
    for (std::size_t b = 0; b < n_buckets; ++b) {
        all[b].lo = lo + width * static_cast<double>(b);
        all[b].hi = all[b].lo + width;
    }
    for (const auto& p : series.points) {
        if (p.missing) continue;
        auto b = hi > lo ? static_cast<std::size_t>((p.feature_value - lo) / width)
                         : std::size_t{0};
        if (b >= n_buckets) b = n_buckets - 1;
        all[b].count += 1;
        all[b].mean_shap += p.shap_value;
    }
    for (auto& b : all) {
        if (b.count > 0) {
            b.mean_shap /= static_cast<double>(b.count);
            buckets.push_back(b);
        }
    }
    return buckets;
}

}  // namespace legigpt::shap
