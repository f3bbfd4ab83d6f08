#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace legigpt::pipeline {

/// Run manifest: one entry per command listing consumed inputs and
/// produced outputs with content hashes. Output paths are relative to the
/// run's output directory. The manifest itself carries no wall-clock
/// state, so identical runs produce identical manifests.
class Manifest {
public:
    struct Entry {
        std::string config_hash;
        std::map<std::string, std::string> inputs;   // path -> sha256
        std::map<std::string, std::string> outputs;  // relative path -> sha256
        nlohmann::json info;                         // command-specific summary
    };

    static Manifest load_or_empty(const std::filesystem::path& output_dir);

    const std::filesystem::path& output_dir() const { return output_dir_; }

    std::optional<Entry> command(const std::string& name) const;
    void record(const std::string& name, Entry entry);

    /// True when `entry` for `name` exists with the same config hash and
    /// input hashes, and every recorded output file still matches its
    /// hash on disk.
    bool up_to_date(const std::string& name, const std::string& config_hash,
                    const std::map<std::string, std::string>& inputs) const;

    void save() const;

    nlohmann::json to_json() const;

private:
    std::filesystem::path output_dir_;
    std::map<std::string, Entry> entries_;
};

}  // namespace legigpt::pipeline
