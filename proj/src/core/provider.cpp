#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "core/provider.hpp"

#include <chrono>
#include <map>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/prompts.hpp"
#include "core/synthetic.hpp"
#include "core/text.hpp"
#include "core/transcript.hpp"

namespace legigpt::filter {

void CompletionRequest::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw Error(errc::invalid_argument, "completion request: temperature out of [0,2]");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw Error(errc::invalid_argument, "completion request: top_p out of (0,1]");
    }
    if (max_tokens < 1) {
        throw Error(errc::invalid_argument, "completion request: max_tokens must be >= 1");
    }
}

std::string CompletionRequest::canonical() const {
    std::ostringstream out;
    out << "temperature=" << temperature << ";max_tokens=" << max_tokens
        << ";top_p=" << top_p << ";prompt=" << prompt;
    return out.str();
}

namespace {

std::string mock_keyword_counts(const std::string& documents) {
    std::map<std::string, long long> counts;
    const auto& nouns = corpus::templates::transport_nouns();
    for (const auto& tok : text::word_tokens(documents)) {
        for (const auto& noun : nouns) {
            if (tok == noun) {
                ++counts[noun];
                break;
            }
        }
    }
    std::string out;
    for (const auto& [noun, count] : counts) {
        out += noun + ": " + std::to_string(count) + "\n";
    }
    return out;
}

std::string mock_keyword_verdict(const std::string& keywords, const std::string& summary) {
    std::set<std::string> lexicon;
    for (const auto& tok : text::word_tokens(keywords)) lexicon.insert(tok);
    for (const auto& tok : text::word_tokens(summary)) {
        if (lexicon.count(tok)) {
            return "RELEVANT: the summary contains the keyword \"" + tok + "\".";
        }
    }
    return "IRRELEVANT: no listed keyword appears in the summary.";
}

std::string mock_sentence_verdict(const std::string& summary) {
    const auto sentences = text::split_sentences(summary);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (corpus::templates::sentence_is_transport(sentences[i])) {
            return "RELEVANT: sentence " + std::to_string(i + 1) +
                   " addresses transportation policy directly.";
        }
    }
    return "IRRELEVANT: transport words appear only incidentally or metaphorically, if "
           "at all.";
}

std::string mock_context_verdict(const std::string& summary) {
    if (corpus::templates::summary_is_primarily_transport(summary)) {
        return "RELEVANT: most of the summary concerns transportation policy.";
    }
    return "IRRELEVANT: transportation is not the primary subject of this bill.";
}

}  // namespace

std::string MockProvider::complete(const CompletionRequest& request) {
    request.validate();
    const std::string task = prompt_task(request.prompt);
    if (task == "translation") {
        return "EN:" + prompt_section(request.prompt, "SUMMARY");
    }
    if (task == "keyword-extraction") {
        return mock_keyword_counts(prompt_section(request.prompt, "DOCUMENTS"));
    }
    if (task == "keyword-verdict") {
        return mock_keyword_verdict(prompt_section(request.prompt, "KEYWORDS"),
                                    prompt_section(request.prompt, "SUMMARY"));
    }
    if (task == "sentence-verdict") {
        return mock_sentence_verdict(prompt_section(request.prompt, "SUMMARY"));
    }
    if (task == "context-verdict") {
        return mock_context_verdict(prompt_section(request.prompt, "SUMMARY"));
    }
    throw Error(errc::provider, "mock provider: unknown task tag '" + task + "'");
}

RemoteProvider::RemoteProvider(RemoteConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw Error(errc::invalid_argument, "remote provider: base_url not set");
    }
    if (config_.api_key.empty()) {
        throw Error(errc::invalid_argument,
                    "remote provider: API key not set (LEGIGPT_API_KEY)");
    }
}

std::string RemoteProvider::complete(const CompletionRequest& request) {
    request.validate();
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    client.set_bearer_token_auth(config_.api_key);

    const nlohmann::json body{
        {"model", config_.model},
        {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"top_p", request.top_p},
    };
    const auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) {
        throw Error(errc::provider, std::string("remote provider: transport error: ") +
                                        httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(errc::provider, "remote provider: HTTP " + std::to_string(res->status) +
                                        ": " + res->body);
    }
    try {
        const nlohmann::json payload = nlohmann::json::parse(res->body);
        return payload.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(errc::provider,
                    std::string("remote provider: unexpected response shape: ") + e.what());
    }
}

ReplayProvider::ReplayProvider(const Transcript& transcript) : transcript_(transcript) {}

std::string ReplayProvider::complete(const CompletionRequest& request) {
    request.validate();
    const auto hit = transcript_.find(request);
    if (!hit) {
        throw Error(errc::provider,
                    "replay provider: transcript miss for request hash " +
                        Transcript::request_hash(request));
    }
    return *hit;
}

RecordingProvider::RecordingProvider(CompletionProvider& inner, Transcript& transcript,
                                     bool wall_clock)
    : inner_(inner), transcript_(transcript), wall_clock_(wall_clock) {}

std::string RecordingProvider::complete(const CompletionRequest& request) {
    const std::string response = inner_.complete(request);
    const std::int64_t ts =
        wall_clock_ ? std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count()
                    : 0;
    transcript_.append(request, response, ts);
    return response;
}

}  // namespace legigpt::filter
