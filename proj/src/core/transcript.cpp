#include "core/transcript.hpp"

#include <json.hpp>

#include <fstream>

#include "core/errors.hpp"
#include "core/hash.hpp"

namespace legigpt::filter {

Transcript::Transcript(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // nothing cached yet
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(errc::parse, path_.string() + ": line " + std::to_string(lineno) +
                                         ": " + e.what());
        }
        responses_[record.at("hash").get<std::string>()] =
            record.at("response").get<std::string>();
    }
}

std::string Transcript::request_hash(const CompletionRequest& request) {
    return hash::sha256_hex(request.canonical());
}

void Transcript::append(const CompletionRequest& request, const std::string& response,
                        std::int64_t timestamp_epoch_s) {
    const std::string h = request_hash(request);
    nlohmann::json record{
        {"hash", h},
        {"request",
         {{"prompt", request.prompt},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens},
          {"top_p", request.top_p}}},
        {"response", response},
        {"recorded_at", timestamp_epoch_s},
    };
    std::lock_guard<std::mutex> lock(mutex_);
    responses_[h] = response;
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::app | std::ios::binary);
        if (!out) throw Error(errc::io, "cannot append to '" + path_.string() + "'");
        out << record.dump() << "\n";
        if (!out) throw Error(errc::io, "append failed for '" + path_.string() + "'");
    }
}

std::optional<std::string> Transcript::find(const CompletionRequest& request) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = responses_.find(request_hash(request));
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

std::size_t Transcript::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return responses_.size();
}

}  // namespace legigpt::filter
