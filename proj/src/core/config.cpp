#include "core/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/text.hpp"

namespace legigpt::pipeline {

KeyValueConfig KeyValueConfig::parse_string(const std::string& content) {
    KeyValueConfig config;
    std::istringstream in(content);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        const std::string trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '[') {
            if (trimmed.back() != ']') {
                throw Error(errc::parse,
                            "config line " + std::to_string(lineno) + ": unterminated section");
            }
            section = text::trim(trimmed.substr(1, trimmed.size() - 2));
            if (section.empty()) {
                throw Error(errc::parse,
                            "config line " + std::to_string(lineno) + ": empty section name");
            }
            continue;
        }
        const std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw Error(errc::parse, "config line " + std::to_string(lineno) +
                                         ": expected key = value, got '" + trimmed + "'");
        }
        const std::string key = text::trim(trimmed.substr(0, eq));
        const std::string value = text::trim(trimmed.substr(eq + 1));
        if (key.empty()) {
            throw Error(errc::parse,
                        "config line " + std::to_string(lineno) + ": empty key");
        }
        config.values_[section.empty() ? key : section + "." + key] = value;
    }
    return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_string(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key,
                                   const std::string& fallback) const {
    const auto v = get(key);
    return v ? *v : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    long long out{};
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
        throw Error(errc::parse, "config key '" + key + "': not an integer: '" + *v + "'");
    }
    return out;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    double out{};
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
        throw Error(errc::parse, "config key '" + key + "': not a number: '" + *v + "'");
    }
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw Error(errc::parse, "config key '" + key + "': not a boolean: '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::vector<std::string> out;
    for (const auto& part : text::split(*v, ',')) {
        const std::string item = text::trim(part);
        if (!item.empty()) out.push_back(item);
    }
    return out.empty() ? fallback : out;
}

std::string KeyValueConfig::canonical_subset(
    const std::vector<std::string>& sections) const {
    std::string out;
    for (const auto& [key, value] : values_) {
        for (const auto& section : sections) {
            if (key.starts_with(section + ".")) {
                out += key + " = " + value + "\n";
                break;
            }
        }
    }
    return out;
}

ProviderMode parse_provider_mode(const std::string& s) {
    if (s == "remote") return ProviderMode::remote;
    if (s == "replay") return ProviderMode::replay;
    if (s == "mock") return ProviderMode::mock;
    throw Error(errc::parse, "unknown provider mode '" + s + "'");
}

const char* to_string(ProviderMode m) {
    switch (m) {
        case ProviderMode::remote: return "remote";
        case ProviderMode::replay: return "replay";
        case ProviderMode::mock: return "mock";
    }
    return "?";
}

ModelSpec parse_model_spec(const std::string& name) {
    if (name == "mlp") return {name, models::ModelKind::mlp, models::GrowthPolicy::level_wise};
    if (name == "rf") return {name, models::ModelKind::rf, models::GrowthPolicy::level_wise};
    if (name == "gbdt_level") {
        return {name, models::ModelKind::gbdt, models::GrowthPolicy::level_wise};
    }
    if (name == "gbdt_leaf") {
        return {name, models::ModelKind::gbdt, models::GrowthPolicy::leaf_wise};
    }
    throw Error(errc::parse, "unknown model name '" + name +
                                 "' (expected mlp, rf, gbdt_leaf, or gbdt_level)");
}

namespace {

/// Paper-derived defaults per model slot; grid sections override them.
models::TrainConfig base_config(const ModelSpec& spec) {
    models::TrainConfig c;
    c.kind = spec.kind;
    c.growth_policy = spec.growth;
    switch (spec.kind) {
        case models::ModelKind::gbdt:
            c.n_estimators = 500;
            if (spec.growth == models::GrowthPolicy::leaf_wise) {
                c.learning_rate = 0.12;
                c.num_leaves = 16;
            } else {
                c.learning_rate = 0.15;
                c.max_depth = 16;
            }
            break;
        case models::ModelKind::rf:
            c.n_estimators = 500;
            c.max_depth = 8;
            break;
        case models::ModelKind::mlp:
            c.hidden_size = 16;
            break;
    }
    return c;
}

}  // namespace

std::vector<models::TrainConfig> expand_grid(const KeyValueConfig& config,
                                             const ModelSpec& spec,
                                             std::uint64_t train_seed) {
    const std::string prefix = "grid." + spec.name + ".";
    models::TrainConfig base = base_config(spec);
    base.seed = train_seed;

    struct IntField {
        const char* key;
        int models::TrainConfig::* member;
    };
    struct DoubleField {
        const char* key;
        double models::TrainConfig::* member;
    };
    static const IntField kIntFields[] = {
        {"n_estimators", &models::TrainConfig::n_estimators},
        {"max_depth", &models::TrainConfig::max_depth},
        {"num_leaves", &models::TrainConfig::num_leaves},
        {"histogram_bins", &models::TrainConfig::histogram_bins},
        {"hidden_size", &models::TrainConfig::hidden_size},
        {"batch_size", &models::TrainConfig::batch_size},
        {"max_epochs", &models::TrainConfig::max_epochs},
        {"patience", &models::TrainConfig::patience},
    };
    static const DoubleField kDoubleFields[] = {
        {"learning_rate", &models::TrainConfig::learning_rate},
        {"min_child_weight", &models::TrainConfig::min_child_weight},
        {"l2_regularization", &models::TrainConfig::l2_regularization},
        {"subsample", &models::TrainConfig::subsample},
        {"colsample", &models::TrainConfig::colsample},
        {"mlp_learning_rate", &models::TrainConfig::mlp_learning_rate},
        {"validation_fraction", &models::TrainConfig::validation_fraction},
    };

    std::vector<models::TrainConfig> grid{base};
    auto parse_number = [](const std::string& key, const std::string& item) {
        double out{};
        const auto res = std::from_chars(item.data(), item.data() + item.size(), out);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
            throw Error(errc::parse,
                        "config key '" + key + "': not a number: '" + item + "'");
        }
        return out;
    };

    for (const auto& f : kIntFields) {
        const auto values = config.get_list(prefix + f.key, {});
        if (values.empty()) continue;
        std::vector<models::TrainConfig> expanded;
        for (const auto& c : grid) {
            for (const auto& item : values) {
                models::TrainConfig next = c;
                next.*(f.member) = static_cast<int>(parse_number(prefix + f.key, item));
                expanded.push_back(next);
            }
        }
        grid = std::move(expanded);
    }
    for (const auto& f : kDoubleFields) {
        const auto values = config.get_list(prefix + f.key, {});
        if (values.empty()) continue;
        std::vector<models::TrainConfig> expanded;
        for (const auto& c : grid) {
            for (const auto& item : values) {
                models::TrainConfig next = c;
                next.*(f.member) = parse_number(prefix + f.key, item);
                expanded.push_back(next);
            }
        }
        grid = std::move(expanded);
    }
    if (const auto bootstrap = config.get(prefix + "bootstrap")) {
        for (auto& c : grid) c.bootstrap = *bootstrap == "true";
    }
    for (const auto& c : grid) c.validate();
    return grid;
}

}  // namespace legigpt::pipeline
