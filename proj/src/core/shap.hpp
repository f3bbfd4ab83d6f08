#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/tree.hpp"

namespace legigpt::shap {

struct RowAttribution {
    std::vector<double> attributions;  // one per feature
    double base_value = 0.0;
};

/// Exact path-dependent TreeSHAP over a tree ensemble. Attributions are in
/// the ensemble's raw-output units (log-odds for boosted models, class-1
/// frequency for forests) and satisfy local accuracy:
/// base_value + sum(attributions) == raw_output(row).
RowAttribution tree_shap(const models::TreeEnsemble& ensemble,
                         std::span<const double> row);

/// Naive Shapley computation over the same cover-conditional value
/// function, enumerating every subset of the features the ensemble
/// actually splits on. Exponential; refuses more than `max_active`
/// active features.
std::vector<double> brute_force_shap(const models::TreeEnsemble& ensemble,
                                     std::span<const double> row,
                                     std::size_t max_active = 15);

/// Cover-conditional expectation of the raw output when exactly the
/// features in `fixed` (bitmask over feature indices listed in
/// `active_features`) are held at the row's values. Exposed for the
/// attribution tests.
double conditional_expectation(const models::TreeEnsemble& ensemble,
                               std::span<const double> row,
                               const std::vector<std::size_t>& active_features,
                               std::uint64_t fixed_mask);

struct ShapMatrix {
    std::size_t n_cols = 0;
    std::vector<double> values;  // n_rows * n_cols
    double base_value = 0.0;
    std::vector<std::pair<std::string, std::string>> row_ids;

    std::size_t n_rows() const { return n_cols ? values.size() / n_cols : 0; }
    std::span<const double> row(std::size_t i) const {
        return std::span(values.data() + i * n_cols, n_cols);
    }
};

ShapMatrix shap_matrix(const models::TreeEnsemble& ensemble,
                       const models::LabeledMatrix& rows);

struct ImportanceEntry {
    std::size_t feature = 0;
    std::string name;
    double mean_abs_shap = 0.0;
};

/// Features ranked by mean |SHAP|, descending; ties keep feature order.
std::vector<ImportanceEntry> importance_ranking(
    const ShapMatrix& matrix, const std::vector<std::string>& feature_names);

struct CorrelationMatrix {
    std::size_t n = 0;
    std::vector<double> values;   // n * n, NaN where undefined
    std::vector<bool> defined;    // n * n

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    bool is_defined(std::size_t i, std::size_t j) const { return defined[i * n + j]; }
};

/// Pairwise Pearson correlation between SHAP columns. Zero-variance
/// columns yield undefined entries, marked distinctly rather than zeroed.
CorrelationMatrix shap_correlation(const ShapMatrix& matrix);

struct DependencePoint {
    std::string bill_id;
    std::string legislator_id;
    double feature_value = 0.0;  // NaN when missing
    double shap_value = 0.0;
    bool missing = false;
};

struct DependenceSeries {
    std::size_t feature = 0;
    std::string name;
    std::vector<DependencePoint> points;  // one per row, row order
};

DependenceSeries dependence_series(const ShapMatrix& shap,
                                   const models::LabeledMatrix& rows,
                                   std::size_t feature);

struct DependenceBucket {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double mean_shap = 0.0;
};

/// Equal-width buckets over the observed (non-missing) feature range;
/// empty buckets are dropped. Used for trend checks on dependence plots.
std::vector<DependenceBucket> bucketed_means(const DependenceSeries& series,
                                             std::size_t n_buckets);

}  // namespace legigpt::shap
