#include <doctest.h>
#include <unistd.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "core/corpus.hpp"
#include "core/errors.hpp"
#include "core/filter.hpp"
#include "core/prompts.hpp"
#include "core/provider.hpp"
#include "core/synthetic.hpp"
#include "core/text.hpp"
#include "core/transcript.hpp"

using namespace legigpt;
namespace fs = std::filesystem;

namespace {

corpus::Bill bill(const std::string& id, const std::string& summary,
                  bool translated = true) {
    corpus::Bill b;
    b.bill_id = id;
    b.title = "Act " + id;
    b.summary = summary;
    if (translated) b.summary_translated = summary;
    b.sponsor_id = "L1";
    return b;
}

filter::FilterOptions fast_options() {
    filter::FilterOptions o;
    o.backoff_seconds = 0.0;
    return o;
}

/// Provider that fails a fixed number of times, then delegates to the mock.
class FlakyProvider : public filter::CompletionProvider {
public:
    explicit FlakyProvider(int failures) : failures_(failures) {}
    std::string complete(const filter::CompletionRequest& request) override {
        if (failures_-- > 0) {
            throw Error(errc::provider, "transient failure");
        }
        return mock_.complete(request);
    }
    const char* name() const override { return "flaky"; }

private:
    std::atomic<int> failures_;
    filter::MockProvider mock_;
};

class FixedProvider : public filter::CompletionProvider {
public:
    explicit FixedProvider(std::string response) : response_(std::move(response)) {}
    std::string complete(const filter::CompletionRequest&) override { return response_; }
    const char* name() const override { return "fixed"; }

private:
    std::string response_;
};

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("legigpt_filter_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("completion request validation") {
    filter::CompletionRequest r;
    r.prompt = "x";
    CHECK_NOTHROW(r.validate());
    r.temperature = 3.0;
    CHECK_THROWS_AS(r.validate(), Error);
    r.temperature = 0.2;
    r.top_p = 0.0;
    CHECK_THROWS_AS(r.validate(), Error);
    r.top_p = 1.0;
    r.max_tokens = 0;
    CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("prompt template machinery") {
    const std::string prompt = filter::apply_template(
        "TASK: demo\nbody\n\nSUMMARY:\n{{summary}}\n", {{"summary", "hello world"}});
    CHECK(filter::prompt_task(prompt) == "demo");
    CHECK(filter::prompt_section(prompt, "SUMMARY") == "hello world");
    CHECK(filter::prompt_section(prompt, "MISSING").empty());
}

TEST_CASE("default prompts carry the three selection instructions verbatim") {
    const auto prompts = filter::PromptSet::defaults();
    CHECK(prompts.keyword_selection.find(
              "Identify all legislative bills containing at least one "
              "transportation-related keyword.") != std::string::npos);
    CHECK(prompts.sentence_selection.find(
              "Among the previously selected bills, determine which exhibit meaningful "
              "transportation-related context in their summaries.") != std::string::npos);
    CHECK(prompts.context_selection.find(
              "Select only those bills in which transportation constitutes the primary "
              "subject or intended legislative outcome.") != std::string::npos);
}

TEST_CASE("prompt files on disk load and match the built-in defaults") {
    TempDir dir;
    const auto defaults = filter::PromptSet::defaults();
    defaults.write(dir.path);
    const auto loaded = filter::PromptSet::load(dir.path);
    CHECK(loaded.translation == defaults.translation);
    CHECK(loaded.keyword_selection == defaults.keyword_selection);
    const auto fallback = filter::PromptSet::load(dir.path / "missing");
    CHECK(fallback.context_selection == defaults.context_selection);
}

TEST_CASE("translate_summaries: mock echoes EN: plus the summary") {
    std::vector<corpus::Bill> bills{bill("B1", "the road act", false),
                                    bill("B2", "tax reform", false)};
    filter::MockProvider provider;
    filter::translate_summaries(bills, provider, filter::PromptSet::defaults(),
                                fast_options());
    CHECK(bills[0].summary_translated == "EN:the road act");
    CHECK(bills[1].summary_translated == "EN:tax reform");
}

TEST_CASE("translate_summaries: existing translations are untouched") {
    std::vector<corpus::Bill> bills{bill("B1", "source text", false)};
    bills[0].summary_translated = "already translated";
    filter::MockProvider provider;
    filter::translate_summaries(bills, provider, filter::PromptSet::defaults(),
                                fast_options());
    CHECK(bills[0].summary_translated == "already translated");
}

TEST_CASE("translate_summaries: empty response aborts naming the bill") {
    std::vector<corpus::Bill> bills{bill("B7", "text", false)};
    FixedProvider provider("");
    CHECK_THROWS_WITH_AS(
        filter::translate_summaries(bills, provider, filter::PromptSet::defaults(),
                                    fast_options()),
        doctest::Contains("B7"), Error);
}

TEST_CASE("retry policy: transient failures are retried, persistent ones abort") {
    std::vector<corpus::Bill> ok_bills{bill("B1", "text", false)};
    FlakyProvider flaky(2);
    CHECK_NOTHROW(filter::translate_summaries(ok_bills, flaky,
                                              filter::PromptSet::defaults(),
                                              fast_options()));

    std::vector<corpus::Bill> bad_bills{bill("B1", "text", false)};
    FlakyProvider dead(100);
    CHECK_THROWS_WITH_AS(
        filter::translate_summaries(bad_bills, dead, filter::PromptSet::defaults(),
                                    fast_options()),
        doctest::Contains("3 attempts"), Error);
}

TEST_CASE("extract_keywords: empty corpus and mock counting") {
    filter::MockProvider provider;
    const auto empty = filter::extract_keywords({}, provider,
                                                filter::PromptSet::defaults(),
                                                fast_options());
    CHECK(empty.empty());

    // two documents whose transport-noun counts merge across batches
    std::vector<corpus::Bill> bills{
        bill("B1", "road road road transit"),
        bill("B2", "road and road again"),
    };
    filter::FilterOptions one_per_batch = fast_options();
    one_per_batch.keyword_batch_size = 1;
    const auto lexicon = filter::extract_keywords(bills, provider,
                                                  filter::PromptSet::defaults(),
                                                  one_per_batch);
    REQUIRE(lexicon.entries.size() == 2);
    CHECK(lexicon.entries[0].keyword == "road");
    CHECK(lexicon.entries[0].frequency == 5);
    CHECK(lexicon.entries[1].keyword == "transit");
    CHECK(lexicon.entries[1].frequency == 1);
}

TEST_CASE("extract_keywords: unparseable responses error with the response text") {
    std::vector<corpus::Bill> bills{bill("B1", "road")};
    FixedProvider garbage("this is not the grammar");
    CHECK_THROWS_WITH_AS(
        filter::extract_keywords(bills, garbage, filter::PromptSet::defaults(),
                                 fast_options()),
        doctest::Contains("this is not the grammar"), Error);
}

TEST_CASE("keyword_select: whole-token matching") {
    const auto lexicon = filter::KeywordLexicon::from_counts({{"road", 1}});
    std::vector<corpus::Bill> bills{
        bill("B1", "the road act"),
        bill("B2", "tax reform"),
        bill("B3", "broadcast reform"),
    };
    const auto result = filter::keyword_select(bills, lexicon);
    CHECK(result.retained_bill_ids == std::vector<std::string>{"B1"});

    const auto none = filter::keyword_select(bills, filter::KeywordLexicon{});
    CHECK(none.retained_bill_ids.empty());
}

TEST_CASE("provider keyword mode is a superset audited against matching") {
    const auto lexicon = filter::KeywordLexicon::from_counts({{"road", 2}});
    std::vector<corpus::Bill> bills{bill("B1", "the road act"), bill("B2", "tax reform")};
    filter::MockProvider provider;
    const auto audit = filter::keyword_select_with_provider(
        bills, lexicon, provider, filter::PromptSet::defaults(), fast_options());
    CHECK(audit.result.retained_bill_ids == std::vector<std::string>{"B1"});
    CHECK(audit.provider_only.empty());
    CHECK(audit.missed_by_provider.empty());
    CHECK_FALSE(audit.result.rationale.at("B1").empty());
}

TEST_CASE("sentence stage excludes metaphorical usage, context stage excludes minority topics") {
    std::vector<corpus::Bill> bills{
        bill("B1",
             "Funding is allocated for new subway corridors connecting rural districts. "
             "Operators of bus terminals must adopt barrier-free design standards."),
        bill("B2",
             "The committee regards this reform as the road to recovery for small "
             "businesses. Penalties for securities fraud are increased under the revised "
             "statute."),
        bill("B3",
             "This act revises the corporate taxation schedule for small enterprises. "
             "The bill strengthens penalties for unfair subcontracting practices. "
             "Disclosure duties for supplementary pension funds are tightened. "
             "The levy also funds repairs of local bus terminals."),
    };
    filter::MockProvider provider;
    const auto prompts = filter::PromptSet::defaults();

    filter::FilterStageResult stage1;
    stage1.stage = filter::Stage::keyword;
    stage1.retained_bill_ids = {"B1", "B2", "B3"};

    const auto stage2 =
        filter::sentence_select(stage1, bills, provider, prompts, fast_options());
    CHECK(stage2.retained_bill_ids == std::vector<std::string>{"B1", "B3"});
    CHECK(stage2.rationale.at("B2").find("IRRELEVANT") == 0);

    const auto stage3 =
        filter::context_select(stage2, bills, provider, prompts, fast_options());
    CHECK(stage3.retained_bill_ids == std::vector<std::string>{"B1"});
}

TEST_CASE("unparseable verdicts error with a transcript-worthy message") {
    std::vector<corpus::Bill> bills{bill("B1", "road act")};
    filter::FilterStageResult stage1;
    stage1.stage = filter::Stage::keyword;
    stage1.retained_bill_ids = {"B1"};
    FixedProvider vague("MAYBE, hard to say");
    CHECK_THROWS_WITH_AS(
        filter::sentence_select(stage1, bills, vague, filter::PromptSet::defaults(),
                                fast_options()),
        doctest::Contains("MAYBE"), Error);
}

TEST_CASE("stage results preserve input order and concurrency does not change them") {
    corpus::SyntheticParams params;
    params.seed = 5;
    params.n_bills = 80;
    params.n_legislators = 30;
    const auto synth = corpus::generate_synthetic_corpus(params);
    std::vector<corpus::Bill> bills = synth.bills;
    filter::skip_translation(bills);

    filter::MockProvider provider;
    const auto prompts = filter::PromptSet::defaults();
    const auto lexicon =
        filter::extract_keywords(bills, provider, prompts, fast_options());
    const auto stage1 = filter::keyword_select(bills, lexicon);
    const auto stage2 =
        filter::sentence_select(stage1, bills, provider, prompts, fast_options());

    filter::FilterOptions parallel = fast_options();
    parallel.concurrency = 4;
    const auto stage2_parallel =
        filter::sentence_select(stage1, bills, provider, prompts, parallel);
    CHECK(stage2.retained_bill_ids == stage2_parallel.retained_bill_ids);
    CHECK(stage2.rationale == stage2_parallel.rationale);

    // subset + order property
    std::size_t cursor = 0;
    for (const auto& id : stage2.retained_bill_ids) {
        while (cursor < stage1.retained_bill_ids.size() &&
               stage1.retained_bill_ids[cursor] != id) {
            ++cursor;
        }
        REQUIRE(cursor < stage1.retained_bill_ids.size());
    }
}

TEST_CASE("full mock pipeline equals the synthetic ground truth") {
    corpus::SyntheticParams params;
    params.seed = 7;
    params.n_bills = 200;
    params.n_legislators = 60;
    params.transport_fraction = 0.3;
    const auto synth = corpus::generate_synthetic_corpus(params);
    std::vector<corpus::Bill> bills = synth.bills;

    filter::MockProvider provider;
    const auto prompts = filter::PromptSet::defaults();
    filter::translate_summaries(bills, provider, prompts, fast_options());
    const auto lexicon = filter::extract_keywords(bills, provider, prompts, fast_options());
    const auto stage1 = filter::keyword_select(bills, lexicon);
    const auto stage2 = filter::sentence_select(stage1, bills, provider, prompts,
                                                fast_options());
    const auto stage3 = filter::context_select(stage2, bills, provider, prompts,
                                               fast_options());

    // monotone funnel
    CHECK(stage1.retained_bill_ids.size() <= bills.size());
    CHECK(stage2.retained_bill_ids.size() <= stage1.retained_bill_ids.size());
    CHECK(stage3.retained_bill_ids.size() <= stage2.retained_bill_ids.size());

    // stage-3 output is exactly the template ground truth
    CHECK(stage3.retained_bill_ids == synth.transport_bill_ids);

    // keyword-stage soundness: retained contain a lexicon token, excluded none
    std::set<std::string> retained(stage1.retained_bill_ids.begin(),
                                   stage1.retained_bill_ids.end());
    for (const auto& b : bills) {
        bool has_token = false;
        for (const auto& tok : text::word_tokens(*b.summary_translated)) {
            if (lexicon.contains(tok)) {
                has_token = true;
                break;
            }
        }
        CHECK(has_token == (retained.count(b.bill_id) != 0));
    }
}

TEST_CASE("audit sampling: ceil arithmetic and reproducibility") {
    filter::FilterStageResult result;
    result.stage = filter::Stage::context;
    for (int i = 0; i < 10; ++i) result.retained_bill_ids.push_back("B" + std::to_string(i));
    const auto sample = filter::draw_audit_sample(result, 0.10, 7);
    CHECK(sample.sampled_bill_ids.size() == 1);

    result.retained_bill_ids.clear();
    for (int i = 0; i < 577; ++i) result.retained_bill_ids.push_back("B" + std::to_string(i));
    const auto big = filter::draw_audit_sample(result, 0.10, 7);
    CHECK(big.sampled_bill_ids.size() == 58);
    const auto again = filter::draw_audit_sample(result, 0.10, 7);
    CHECK(big.sampled_bill_ids == again.sampled_bill_ids);

    result.retained_bill_ids.clear();
    const auto empty = filter::draw_audit_sample(result, 0.10, 7);
    CHECK(empty.sampled_bill_ids.empty());

    CHECK_THROWS_AS(filter::draw_audit_sample(result, 0.0, 7), Error);
    CHECK_THROWS_AS(filter::draw_audit_sample(result, 1.5, 7), Error);
}

TEST_CASE("funnel report reproduces the reference arithmetic") {
    const auto report = filter::funnel_report(
        23655, {{"keyword", 3874}, {"sentence", 902}, {"context", 577}});
    REQUIRE(report.stages.size() == 3);
    CHECK(report.stages[0].retention_pct == doctest::Approx(16.4));
    CHECK(report.stages[1].retention_pct == doctest::Approx(3.8));
    CHECK(report.stages[2].retention_pct == doctest::Approx(2.4));
    CHECK(report.total_reduction_pct == doctest::Approx(97.6));
}

TEST_CASE("funnel report: boundaries and violations") {
    const auto flat = filter::funnel_report(100, {{"a", 100}, {"b", 100}, {"c", 100}});
    for (const auto& s : flat.stages) CHECK(s.retention_pct == doctest::Approx(100.0));
    CHECK(flat.total_reduction_pct == doctest::Approx(0.0));

    const auto halves = filter::funnel_report(100, {{"a", 50}, {"b", 25}, {"c", 10}});
    CHECK(halves.stages[0].retention_pct == doctest::Approx(50.0));
    CHECK(halves.stages[1].retention_pct == doctest::Approx(25.0));
    CHECK(halves.stages[2].retention_pct == doctest::Approx(10.0));
    CHECK(halves.total_reduction_pct == doctest::Approx(90.0));

    CHECK_THROWS_AS(filter::funnel_report(100, {{"a", 120}}), Error);
    CHECK_THROWS_AS(filter::funnel_report(100, {{"a", 50}, {"b", 60}}), Error);
}

TEST_CASE("keyword frequency table weights") {
    const auto single = filter::keyword_frequency_table(
        filter::KeywordLexicon::from_counts({{"road", 5}}));
    REQUIRE(single.size() == 1);
    CHECK(single[0].weight == doctest::Approx(1.0));

    const auto two = filter::keyword_frequency_table(
        filter::KeywordLexicon::from_counts({{"road", 10}, {"bus", 5}}));
    REQUIRE(two.size() == 2);
    CHECK(two[0].keyword == "road");
    CHECK(two[0].weight == doctest::Approx(1.0));
    CHECK(two[1].weight == doctest::Approx(0.5));

    CHECK_THROWS_AS(filter::keyword_frequency_table(filter::KeywordLexicon{}), Error);
}

TEST_CASE("transcript: record, replay, and miss") {
    TempDir dir;
    const fs::path path = dir.path / "transcript.jsonl";

    std::vector<corpus::Bill> bills{bill("B1", "road act", false),
                                    bill("B2", "transit fare reform", false)};
    {
        filter::Transcript transcript(path);
        filter::MockProvider mock;
        filter::RecordingProvider recording(mock, transcript, /*wall_clock=*/false);
        filter::translate_summaries(bills, recording, filter::PromptSet::defaults(),
                                    fast_options());
        CHECK(transcript.size() == 2);
    }

    // replay answers identically without touching the mock
    filter::Transcript reloaded(path);
    CHECK(reloaded.size() == 2);
    filter::ReplayProvider replay(reloaded);
    std::vector<corpus::Bill> fresh{bill("B1", "road act", false),
                                    bill("B2", "transit fare reform", false)};
    filter::translate_summaries(fresh, replay, filter::PromptSet::defaults(),
                                fast_options());
    CHECK(fresh[0].summary_translated == bills[0].summary_translated);
    CHECK(fresh[1].summary_translated == bills[1].summary_translated);

    // a novel request misses
    filter::CompletionRequest novel;
    novel.prompt = "TASK: translation\nSUMMARY:\nnever seen\n";
    CHECK_THROWS_WITH_AS(replay.complete(novel), doctest::Contains("miss"), Error);

    // mock-mode records carry the deterministic timestamp 0
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    const auto record = nlohmann::json::parse(line);
    CHECK(record.at("recorded_at").get<std::int64_t>() == 0);
    CHECK(record.at("hash").get<std::string>().size() == 64);
}

TEST_CASE("remote provider speaks the chat-completions schema") {
    httplib::Server server;
    std::string seen_auth;
    nlohmann::json seen_body;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                    seen_auth = req.get_header_value("Authorization");
                    seen_body = nlohmann::json::parse(req.body);
                    const nlohmann::json payload{
                        {"choices",
                         {{{"message", {{"role", "assistant"}, {"content", "RELEVANT: ok"}}}}}}};
                    res.set_content(payload.dump(), "application/json");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    while (!server.is_running()) std::this_thread::yield();

    filter::RemoteConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.model = "test-model";
    config.api_key = "sk-test";
    filter::RemoteProvider provider(config);

    filter::CompletionRequest request;
    request.prompt = "TASK: sentence-verdict\nSUMMARY:\nroad act\n";
    const std::string response = provider.complete(request);
    CHECK(response == "RELEVANT: ok");
    CHECK(seen_auth == "Bearer sk-test");
    CHECK(seen_body.at("model") == "test-model");
    CHECK(seen_body.at("temperature").get<double>() == doctest::Approx(0.2));
    CHECK(seen_body.at("max_tokens").get<int>() == 256);
    CHECK(seen_body.at("messages").at(0).at("content").get<std::string>() ==
          request.prompt);

    server.stop();
    server_thread.join();
}

TEST_CASE("remote provider surfaces http failures as provider errors") {
    httplib::Server server;
    server.Post("/v1/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    res.status = 500;
                    res.set_content("boom", "text/plain");
                });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    while (!server.is_running()) std::this_thread::yield();

    filter::RemoteConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.api_key = "sk-test";
    filter::RemoteProvider provider(config);
    filter::CompletionRequest request;
    request.prompt = "x";
    CHECK_THROWS_AS(provider.complete(request), Error);

    server.stop();
    server_thread.join();

    filter::RemoteConfig no_key;
    no_key.base_url = "http://127.0.0.1:1";
    CHECK_THROWS_AS(filter::RemoteProvider{no_key}, Error);
}
