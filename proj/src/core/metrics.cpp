#include "core/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdio>

#include "core/errors.hpp"

namespace legigpt::metrics {

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw Error(errc::invalid_argument,
                    "confusion: length mismatch (" + std::to_string(y_true.size()) +
                        " vs " + std::to_string(y_pred.size()) + ")");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
            throw Error(errc::invalid_argument,
                        "confusion: non-binary label at index " + std::to_string(i));
        }
        if (t == 1 && p == 1) ++cm.tp;
        else if (t == 0 && p == 1) ++cm.fp;
        else if (t == 1 && p == 0) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

std::optional<double> precision(const ConfusionMatrix& cm) {
    const long long denom = cm.tp + cm.fp;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(cm.tp) / static_cast<double>(denom);
}

std::optional<double> recall(const ConfusionMatrix& cm) {
    const long long denom = cm.tp + cm.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(cm.tp) / static_cast<double>(denom);
}

std::optional<double> f1(const ConfusionMatrix& cm) {
    const auto p = precision(cm);
    const auto r = recall(cm);
    if (!p || !r) return std::nullopt;
    if (*p + *r == 0.0) return std::nullopt;
    return 2.0 * (*p) * (*r) / (*p + *r);
}

MetricsReport report(const ConfusionMatrix& cm) {
    return MetricsReport{precision(cm), recall(cm), f1(cm)};
}

double student_t_quantile(std::size_t degrees_of_freedom, double probability) {
    const boost::math::students_t dist(static_cast<double>(degrees_of_freedom));
    return boost::math::quantile(dist, probability);
}

Aggregate aggregate(const std::vector<std::optional<double>>& values) {
    Aggregate out;
    double sum = 0.0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++out.n_defined;
        } else {
            ++out.n_undefined;
        }
    }
    if (out.n_defined < 2) {
        throw Error(errc::invalid_argument,
                    "aggregate: needs at least 2 defined values, got " +
                        std::to_string(out.n_defined));
    }
    const double n = static_cast<double>(out.n_defined);
    out.mean = sum / n;
    double ss = 0.0;
    for (const auto& v : values) {
        if (v) {
            const double d = *v - out.mean;
            ss += d * d;
        }
    }
    const double sample_sd = std::sqrt(ss / (n - 1.0));
    const double t = student_t_quantile(out.n_defined - 1, 0.975);
    out.ci_half_width = t * sample_sd / std::sqrt(n);
    return out;
}

AggregatedMetrics aggregate_runs(const std::vector<MetricsReport>& runs) {
    std::vector<std::optional<double>> p, r, f;
    p.reserve(runs.size());
    r.reserve(runs.size());
    f.reserve(runs.size());
    for (const auto& run : runs) {
        p.push_back(run.precision);
        r.push_back(run.recall);
        f.push_back(run.f1);
    }
    return AggregatedMetrics{aggregate(p), aggregate(r), aggregate(f)};
}

std::string format_metric(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", value);
    return buf;
}

std::string format_metric(const std::optional<double>& value) {
    return value ? format_metric(*value) : std::string("undefined");
}

std::string format_aggregate(const Aggregate& a) {
    return format_metric(a.mean) + " ± " + format_metric(a.ci_half_width);
}

}  // namespace legigpt::metrics
