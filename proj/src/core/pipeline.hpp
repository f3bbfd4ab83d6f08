#pragma once

#include <filesystem>
#include <string>

#include "core/config.hpp"

namespace legigpt::pipeline {

/// Batch pipeline driver. Each subcommand consumes its predecessor's
/// outputs (checked through the run manifest's content hashes), is
/// idempotent for unchanged inputs, and appends its own manifest entry.
///
/// Commands: ingest | filter | features | train | explain | report.
class Pipeline {
public:
    explicit Pipeline(const std::filesystem::path& config_path);
    Pipeline(KeyValueConfig config, std::filesystem::path base_dir);

    /// Dotted-key override ("provider.mode", "output.dir", ...), applied
    /// on top of the config file. Secrets never come from this path; the
    /// API key is read from the LEGIGPT_API_KEY environment variable.
    void set_override(const std::string& key, const std::string& value);

    void run(const std::string& command);

    std::filesystem::path output_dir() const;
    const KeyValueConfig& config() const { return config_; }

private:
    void cmd_ingest();
    void cmd_filter();
    void cmd_features();
    void cmd_train();
    void cmd_explain();
    void cmd_report();

    std::filesystem::path resolve(const std::string& path) const;
    std::string section_hash(const std::vector<std::string>& sections) const;
    void require_done(const std::string& command) const;

    KeyValueConfig config_;
    std::filesystem::path base_dir_;
};

}  // namespace legigpt::pipeline
