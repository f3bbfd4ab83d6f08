#pragma once

#include <memory>
#include <string>

namespace legigpt::filter {

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.2;
    int max_tokens = 256;
    double top_p = 1.0;

    void validate() const;
    /// Canonical serialization used for transcript hashing.
    std::string canonical() const;
};

/// Behavior contract for completion backends. Implementations must be
/// safe to call from multiple threads.
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual const char* name() const = 0;
};

/// Deterministic rule-based provider keyed on the prompt's TASK tag.
/// On corpora built from the synthetic templates it acts as an exact
/// oracle: translation echoes "EN:" + text, keyword extraction counts the
/// template transport nouns, and the two verdict tasks apply the template
/// sentence/majority rules.
class MockProvider : public CompletionProvider {
public:
    std::string complete(const CompletionRequest& request) override;
    const char* name() const override { return "mock"; }
};

struct RemoteConfig {
    std::string base_url;  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4";
    std::string api_key;
    int timeout_seconds = 60;
};

/// Single-attempt HTTPS client against a chat-completions style endpoint;
/// retry policy lives with the callers. Throws errc::provider on any
/// transport, status, or payload problem.
class RemoteProvider : public CompletionProvider {
public:
    explicit RemoteProvider(RemoteConfig config);
    std::string complete(const CompletionRequest& request) override;
    const char* name() const override { return "remote"; }

private:
    RemoteConfig config_;
};

class Transcript;

/// Answers every request from a transcript; a miss is an error.
class ReplayProvider : public CompletionProvider {
public:
    explicit ReplayProvider(const Transcript& transcript);
    std::string complete(const CompletionRequest& request) override;
    const char* name() const override { return "replay"; }

private:
    const Transcript& transcript_;
};

/// Decorator that records every exchange to the transcript before the
/// response is returned to the caller. `wall_clock = false` stamps records
/// with 0, keeping cache bytes reproducible for deterministic providers.
class RecordingProvider : public CompletionProvider {
public:
    RecordingProvider(CompletionProvider& inner, Transcript& transcript, bool wall_clock);
    std::string complete(const CompletionRequest& request) override;
    const char* name() const override { return inner_.name(); }

private:
    CompletionProvider& inner_;
    Transcript& transcript_;
    bool wall_clock_;
};

}  // namespace legigpt::filter
