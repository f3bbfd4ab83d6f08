#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace legigpt::metrics {

/// Binary confusion counts. Positive class is label 1 (conservative).
struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;

    long long total() const { return tp + fp + fn + tn; }
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Zero-denominator metrics come back empty rather than as a silent 0.
std::optional<double> precision(const ConfusionMatrix& cm);
std::optional<double> recall(const ConfusionMatrix& cm);
std::optional<double> f1(const ConfusionMatrix& cm);

struct MetricsReport {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

MetricsReport report(const ConfusionMatrix& cm);

struct Aggregate {
    double mean = 0.0;
    double ci_half_width = 0.0;  // two-sided 95%, Student-t with n-1 df
    std::size_t n_defined = 0;
    std::size_t n_undefined = 0;
};

/// Mean and 95% confidence half-width over the defined entries. Throws if
/// fewer than two entries are defined.
Aggregate aggregate(const std::vector<std::optional<double>>& values);

struct AggregatedMetrics {
    Aggregate precision;
    Aggregate recall;
    Aggregate f1;
};

AggregatedMetrics aggregate_runs(const std::vector<MetricsReport>& runs);

/// Upper-tail Student-t quantile, e.g. probability 0.975 for a 95% CI.
double student_t_quantile(std::size_t degrees_of_freedom, double probability);

/// Presentation-only rounding: "0.978" / "0.977 ± 0.002" style.
std::string format_metric(double value);
std::string format_metric(const std::optional<double>& value);
std::string format_aggregate(const Aggregate& a);

}  // namespace legigpt::metrics
