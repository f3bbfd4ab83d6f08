#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/train_config.hpp"

namespace legigpt::pipeline {

/// Flat key-value run configuration with [section] headers. Keys are
/// addressed as "section.key". '#' and ';' start comments.
class KeyValueConfig {
public:
    static KeyValueConfig parse_string(const std::string& content);
    static KeyValueConfig parse_file(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    std::optional<std::string> get(const std::string& key) const;

    std::string get_or(const std::string& key, const std::string& fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Comma-separated list value; empty or missing -> fallback.
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback) const;

    /// Canonical "key = value" dump of the sections whose name is in
    /// `sections` (sorted), used for content-hash short-circuiting.
    std::string canonical_subset(const std::vector<std::string>& sections) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

enum class ProviderMode { remote, replay, mock };
ProviderMode parse_provider_mode(const std::string& s);
const char* to_string(ProviderMode m);

/// A named model slot in the training round: the grid key plus how to
/// train it.
struct ModelSpec {
    std::string name;  // mlp | rf | gbdt_leaf | gbdt_level
    models::ModelKind kind;
    models::GrowthPolicy growth;
};

ModelSpec parse_model_spec(const std::string& name);

/// Expands "grid.<name>" entries into the cross-product of configs.
/// List-valued keys (comma-separated) multiply the grid.
std::vector<models::TrainConfig> expand_grid(const KeyValueConfig& config,
                                             const ModelSpec& spec,
                                             std::uint64_t train_seed);

}  // namespace legigpt::pipeline
