#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "core/dataset.hpp"
#include "core/train_config.hpp"
#include "core/tree.hpp"

namespace legigpt::models {

/// The bare network: input(d) -> hidden(rectified linear) -> 1 logit.
/// Operates on already-preprocessed inputs; MlpModel adds imputation and
/// standardization around it.
struct MlpNet {
    std::size_t n_inputs = 0;
    int hidden = 16;
    std::vector<double> w1;  // hidden x n_inputs, row-major per unit
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;

    void init(std::size_t inputs, int hidden_units, std::uint64_t seed);

    double logit(std::span<const double> x) const;
    double probability(std::span<const double> x) const { return sigmoid(logit(x)); }

    /// Mean binary cross-entropy over a batch (rows of X, row-major).
    double batch_loss(const std::vector<double>& X, std::size_t d,
                      const std::vector<int>& y) const;

    struct Gradients {
        std::vector<double> w1;
        std::vector<double> b1;
        std::vector<double> w2;
        double b2 = 0.0;
    };

    /// Analytic gradients of batch_loss with respect to every parameter.
    Gradients batch_gradients(const std::vector<double>& X, std::size_t d,
                              const std::vector<int>& y) const;

    std::size_t param_count() const { return w1.size() + b1.size() + w2.size() + 1; }
    double get_param(std::size_t i) const;
    void set_param(std::size_t i, double v);
};

struct MlpModel {
    MlpNet net;
    /// Per-column training-split statistics: missing entries impute to the
    /// column mean, then all columns standardize to zero mean / unit sd.
    std::vector<double> impute_means;
    std::vector<double> feature_means;
    std::vector<double> feature_sds;
    std::vector<double> loss_trace;  // mean training loss per epoch

    // optimizer state, retained for inspection
    long long step_count = 0;
    std::vector<double> adam_m;
    std::vector<double> adam_v;

    double predict_row(std::span<const double> raw) const;
    std::vector<double> predict_proba(const std::vector<double>& rows,
                                      std::size_t n_cols) const;
};

/// Mini-batch Adam on mean binary cross-entropy, with an internal
/// validation split for early stopping on loss patience.
MlpModel train_mlp(const LabeledMatrix& train, const TrainConfig& config);

std::string serialize_mlp(const MlpModel& model, const std::string& config_echo);

struct ParsedMlp {
    MlpModel model;
    std::string config_echo;
};

ParsedMlp parse_mlp(std::string_view text);
void save_mlp(const std::filesystem::path& path, const MlpModel& model,
              const std::string& config_echo);
ParsedMlp load_mlp(const std::filesystem::path& path);

}  // namespace legigpt::models
