#include "core/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace legigpt::models {

void MlpNet::init(std::size_t inputs, int hidden_units, std::uint64_t seed) {
    n_inputs = inputs;
    hidden = hidden_units;
    const auto h = static_cast<std::size_t>(hidden_units);
    w1.assign(h * inputs, 0.0);
    b1.assign(h, 0.0);
    w2.assign(h, 0.0);
    b2 = 0.0;
    Rng rng(seed);
    const double limit1 = std::sqrt(6.0 / static_cast<double>(inputs + h));
    for (auto& w : w1) w = rng.uniform_real(-limit1, limit1);
    const double limit2 = std::sqrt(6.0 / static_cast<double>(h + 1));
    for (auto& w : w2) w = rng.uniform_real(-limit2, limit2);
}

double MlpNet::logit(std::span<const double> x) const {
    double z = b2;
    const auto h = static_cast<std::size_t>(hidden);
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1[j];
        const double* wrow = w1.data() + j * n_inputs;
        for (std::size_t i = 0; i < n_inputs; ++i) a += wrow[i] * x[i];
        if (a > 0.0) z += w2[j] * a;
    }
    return z;
}

namespace {

// softplus(z) - y z, stable for large |z|
double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double MlpNet::batch_loss(const std::vector<double>& X, std::size_t d,
                          const std::vector<int>& y) const {
    const std::size_t n = y.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += bce_from_logit(logit(std::span(X.data() + i * d, d)),
                                static_cast<double>(y[i]));
    }
    return total / static_cast<double>(n);
}

MlpNet::Gradients MlpNet::batch_gradients(const std::vector<double>& X, std::size_t d,
                                          const std::vector<int>& y) const {
    const std::size_t n = y.size();
    const auto h = static_cast<std::size_t>(hidden);
    Gradients g;
    g.w1.assign(w1.size(), 0.0);
    g.b1.assign(b1.size(), 0.0);
    g.w2.assign(w2.size(), 0.0);
    g.b2 = 0.0;

    std::vector<double> act(h);
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> x(X.data() + i * d, d);
        double z = b2;
        for (std::size_t j = 0; j < h; ++j) {
            double a = b1[j];
            const double* wrow = w1.data() + j * n_inputs;
            for (std::size_t k = 0; k < n_inputs; ++k) a += wrow[k] * x[k];
            act[j] = a > 0.0 ? a : 0.0;
            z += w2[j] * act[j];
        }
        const double dz = sigmoid(z) - static_cast<double>(y[i]);
        g.b2 += dz;
        for (std::size_t j = 0; j < h; ++j) {
            g.w2[j] += dz * act[j];
            if (act[j] > 0.0) {
                const double da = dz * w2[j];
                g.b1[j] += da;
                double* grow = g.w1.data() + j * n_inputs;
                for (std::size_t k = 0; k < n_inputs; ++k) grow[k] += da * x[k];
            }
        }
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : g.w1) v *= scale;
    for (auto& v : g.b1) v *= scale;
    for (auto& v : g.w2) v *= scale;
    g.b2 *= scale;
    return g;
}

double MlpNet::get_param(std::size_t i) const {
    if (i < w1.size()) return w1[i];
    i -= w1.size();
    if (i < b1.size()) return b1[i];
    i -= b1.size();
    if (i < w2.size()) return w2[i];
    return b2;
}

void MlpNet::set_param(std::size_t i, double v) {
    if (i < w1.size()) {
        w1[i] = v;
        return;
    }
    i -= w1.size();
    if (i < b1.size()) {
        b1[i] = v;
        return;
    }
    i -= b1.size();
    if (i < w2.size()) {
        w2[i] = v;
        return;
    }
    b2 = v;
}

double MlpModel::predict_row(std::span<const double> raw) const {
    std::vector<double> x(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        const double v = is_missing(raw[j]) ? impute_means[j] : raw[j];
        x[j] = (v - feature_means[j]) / feature_sds[j];
    }
    return net.probability(x);
}

std::vector<double> MlpModel::predict_proba(const std::vector<double>& rows,
                                            std::size_t n_cols) const {
    if (n_cols != net.n_inputs) {
        throw Error(errc::invalid_argument,
                    "mlp predict: row width " + std::to_string(n_cols) +
                        " does not match " + std::to_string(net.n_inputs) +
                        " model features");
    }
    const std::size_t n = n_cols ? rows.size() / n_cols : 0;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = predict_row(std::span(rows.data() + i * n_cols, n_cols));
    }
    return out;
}

MlpModel train_mlp(const LabeledMatrix& train, const TrainConfig& config) {
    config.validate();
    if (config.kind != ModelKind::mlp) {
        throw Error(errc::invalid_argument, "train_mlp: config.kind must be mlp");
    }
    const std::size_t n = train.n_rows();
    const std::size_t d = train.n_cols;
    if (n == 0) throw Error(errc::invalid_argument, "train_mlp: empty training set");
    for (const int y : train.labels) {
        if (y != 0 && y != 1) {
            throw Error(errc::invalid_argument, "train_mlp: labels must be binary");
        }
    }

    MlpModel model;
    model.impute_means.assign(d, 0.0);
    model.feature_means.assign(d, 0.0);
    model.feature_sds.assign(d, 1.0);

    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = train.row(i)[j];
            if (!is_missing(v)) {
                sum += v;
                ++count;
            }
        }
        model.impute_means[j] = count ? sum / static_cast<double>(count) : 0.0;
    }

    // standardization stats over the imputed column
    std::vector<double> X(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = train.row(i)[j];
            X[i * d + j] = is_missing(v) ? model.impute_means[j] : v;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += X[i * d + j];
        model.feature_means[j] = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = X[i * d + j] - model.feature_means[j];
            ss += dev * dev;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        model.feature_sds[j] = sd > 0.0 ? sd : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            X[i * d + j] = (X[i * d + j] - model.feature_means[j]) / model.feature_sds[j];
        }
    }

    Rng rng(config.seed);
    model.net.init(d, config.hidden_size, rng.child(1).seed());

    // internal validation split for early stopping
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng split_rng = rng.child(2);
    split_rng.shuffle(order);
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(config.validation_fraction * static_cast<double>(n)));
    if (n < 20) n_val = 0;  // too small to hold anything out
    const std::size_t n_fit = n - n_val;

    auto gather = [&](std::size_t begin, std::size_t end, std::vector<double>& bx,
                      std::vector<int>& by) {
        bx.clear();
        by.clear();
        for (std::size_t k = begin; k < end; ++k) {
            const std::size_t i = order[k];
            bx.insert(bx.end(), X.begin() + static_cast<long>(i * d),
                      X.begin() + static_cast<long>((i + 1) * d));
            by.push_back(train.labels[i]);
        }
    };

    std::vector<double> val_x;
    std::vector<int> val_y;
    gather(n_fit, n, val_x, val_y);

    const std::size_t p = model.net.param_count();
    model.adam_m.assign(p, 0.0);
    model.adam_v.assign(p, 0.0);
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;

    std::vector<std::size_t> fit_order(order.begin(),
                                       order.begin() + static_cast<long>(n_fit));
    Rng epoch_rng = rng.child(3);

    double best_val = std::numeric_limits<double>::infinity();
    MlpNet best_net = model.net;
    int epochs_since_best = 0;

    std::vector<double> bx;
    std::vector<int> by;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        epoch_rng.shuffle(fit_order);
        for (std::size_t start = 0; start < n_fit; start += batch) {
            const std::size_t end = std::min(start + batch, n_fit);
            bx.clear();
            by.clear();
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = fit_order[k];
                bx.insert(bx.end(), X.begin() + static_cast<long>(i * d),
                          X.begin() + static_cast<long>((i + 1) * d));
                by.push_back(train.labels[i]);
            }
            const MlpNet::Gradients g = model.net.batch_gradients(bx, d, by);
            ++model.step_count;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(model.step_count));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(model.step_count));
            for (std::size_t i = 0; i < p; ++i) {
                double gi;
                if (i < g.w1.size()) gi = g.w1[i];
                else if (i < g.w1.size() + g.b1.size()) gi = g.b1[i - g.w1.size()];
                else if (i < g.w1.size() + g.b1.size() + g.w2.size())
                    gi = g.w2[i - g.w1.size() - g.b1.size()];
                else gi = g.b2;
                model.adam_m[i] = kBeta1 * model.adam_m[i] + (1.0 - kBeta1) * gi;
                model.adam_v[i] = kBeta2 * model.adam_v[i] + (1.0 - kBeta2) * gi * gi;
                const double mhat = model.adam_m[i] / bc1;
                const double vhat = model.adam_v[i] / bc2;
                model.net.set_param(i, model.net.get_param(i) -
                                           config.mlp_learning_rate * mhat /
                                               (std::sqrt(vhat) + kEps));
            }
        }

        const double train_loss = model.net.batch_loss(X, d, train.labels);
        if (!std::isfinite(train_loss)) {
            throw Error(errc::internal, "train_mlp: non-finite loss at epoch " +
                                            std::to_string(epoch));
        }
        model.loss_trace.push_back(train_loss);

        if (n_val > 0) {
            const double val_loss = model.net.batch_loss(val_x, d, val_y);
            if (val_loss + 1e-12 < best_val) {
                best_val = val_loss;
                best_net = model.net;
                epochs_since_best = 0;
            } else if (++epochs_since_best >= config.patience) {
                model.net = best_net;
                break;
            }
        }
    }
    if (n_val > 0 && best_val < std::numeric_limits<double>::infinity()) {
        model.net = best_net;
    }
    return model;
}

namespace {

constexpr const char* kMlpFormatTag = "legigpt-mlp v1";

void write_vector(std::ostream& out, const char* name, const std::vector<double>& v) {
    out << name;
    for (const double x : v) out << " " << csv::format_double(x);
    out << "\n";
}

std::vector<double> read_vector(std::istream& in, const char* name, std::size_t expected) {
    std::string line;
    if (!std::getline(in, line)) throw Error(errc::parse, "mlp parse: truncated file");
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key != name) {
        throw Error(errc::parse, std::string("mlp parse: expected '") + name + "', got '" +
                                     key + "'");
    }
    std::vector<double> v(expected);
    for (auto& x : v) ls >> x;
    if (!ls) throw Error(errc::parse, std::string("mlp parse: short vector ") + name);
    return v;
}

}  // namespace

std::string serialize_mlp(const MlpModel& model, const std::string& config_echo) {
    std::ostringstream out;
    out << kMlpFormatTag << "\n";
    std::string echo = config_echo;
    for (auto& c : echo) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    out << "config " << echo << "\n";
    out << "n_inputs " << model.net.n_inputs << "\n";
    out << "hidden " << model.net.hidden << "\n";
    write_vector(out, "impute_means", model.impute_means);
    write_vector(out, "feature_means", model.feature_means);
    write_vector(out, "feature_sds", model.feature_sds);
    write_vector(out, "w1", model.net.w1);
    write_vector(out, "b1", model.net.b1);
    write_vector(out, "w2", model.net.w2);
    out << "b2 " << csv::format_double(model.net.b2) << "\n";
    out << "end\n";
    return out.str();
}

ParsedMlp parse_mlp(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kMlpFormatTag) {
        throw Error(errc::parse, "mlp parse: missing format header");
    }
    ParsedMlp out;
    if (!std::getline(in, line) || !line.starts_with("config")) {
        throw Error(errc::parse, "mlp parse: expected config line");
    }
    out.config_echo = line.size() > 7 ? line.substr(7) : "";
    std::string key;
    {
        std::getline(in, line);
        std::istringstream ls(line);
        ls >> key >> out.model.net.n_inputs;
        if (key != "n_inputs" || !ls) throw Error(errc::parse, "mlp parse: bad n_inputs");
    }
    {
        std::getline(in, line);
        std::istringstream ls(line);
        ls >> key >> out.model.net.hidden;
        if (key != "hidden" || !ls || out.model.net.hidden < 1) {
            throw Error(errc::parse, "mlp parse: bad hidden");
        }
    }
    const std::size_t d = out.model.net.n_inputs;
    const auto h = static_cast<std::size_t>(out.model.net.hidden);
    out.model.impute_means = read_vector(in, "impute_means", d);
    out.model.feature_means = read_vector(in, "feature_means", d);
    out.model.feature_sds = read_vector(in, "feature_sds", d);
    out.model.net.w1 = read_vector(in, "w1", h * d);
    out.model.net.b1 = read_vector(in, "b1", h);
    out.model.net.w2 = read_vector(in, "w2", h);
    {
        std::getline(in, line);
        std::istringstream ls(line);
        ls >> key >> out.model.net.b2;
        if (key != "b2" || !ls) throw Error(errc::parse, "mlp parse: bad b2");
    }
    std::getline(in, line);
    if (line != "end") throw Error(errc::parse, "mlp parse: missing end marker");
    return out;
}

void save_mlp(const std::filesystem::path& path, const MlpModel& model,
              const std::string& config_echo) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io, "cannot write '" + path.string() + "'");
    out << serialize_mlp(model, config_echo);
    if (!out) throw Error(errc::io, "write failed for '" + path.string() + "'");
}

ParsedMlp load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mlp(buf.str());
}

}  // namespace legigpt::models
