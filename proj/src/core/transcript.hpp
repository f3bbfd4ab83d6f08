#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "core/provider.hpp"

namespace legigpt::filter {

/// Append-only line-delimited cache of provider exchanges. Each line is a
/// JSON record of (request hash, full request, full response, timestamp).
/// Appends are serialized; lookups answer from the in-memory index.
class Transcript {
public:
    /// Opens (or creates) the transcript at `path`, loading existing
    /// records into the index.
    explicit Transcript(std::filesystem::path path);

    /// In-memory transcript without a backing file (tests, dry runs).
    Transcript() = default;

    static std::string request_hash(const CompletionRequest& request);

    void append(const CompletionRequest& request, const std::string& response,
                std::int64_t timestamp_epoch_s);

    std::optional<std::string> find(const CompletionRequest& request) const;

    std::size_t size() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> responses_;
};

}  // namespace legigpt::filter
