#include "core/filter.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <thread>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

namespace legigpt::filter {

namespace {

const std::string& judged_text(const corpus::Bill& bill, bool translated) {
    if (!translated) return bill.summary;
    if (!bill.summary_translated) {
        throw Error(errc::state, "bill " + bill.bill_id + ": summary not translated");
    }
    return *bill.summary_translated;
}

/// Bounded-retry provider call; `parse` returns nullopt to count a
/// response as a failure. Throws errc::provider after the attempts run out.
template <typename T, typename ParseFn>
T call_with_retries(CompletionProvider& provider, const CompletionRequest& request,
                    const FilterOptions& options, const std::string& what,
                    ParseFn&& parse) {
    std::string last_problem;
    double backoff = options.backoff_seconds;
    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        if (attempt > 1 && backoff > 0.0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
        std::string response;
        try {
            response = provider.complete(request);
        } catch (const Error& e) {
            last_problem = e.what();
            continue;
        }
        if (auto parsed = parse(response)) return std::move(*parsed);
        last_problem = "unparseable response: \"" + response + "\"";
    }
    throw Error(errc::provider,
                what + ": gave up after " + std::to_string(options.max_attempts) +
                    " attempts; last problem: " + last_problem);
}

enum class Verdict { relevant, irrelevant };

std::optional<Verdict> parse_verdict(const std::string& response) {
    const auto tokens = text::word_tokens(response);
    if (tokens.empty()) return std::nullopt;
    if (tokens.front() == "relevant") return Verdict::relevant;
    if (tokens.front() == "irrelevant") return Verdict::irrelevant;
    return std::nullopt;
}

struct VerdictOutcome {
    Verdict verdict;
    std::string response;
};

/// Runs fn(i) for i in [0, n) on up to `concurrency` threads; exceptions
/// propagate. Output slots are pre-indexed so results keep input order no
/// matter which worker finishes first.
void parallel_for(std::size_t n, int concurrency, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int workers =
        std::max(1, std::min<int>(concurrency, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    failures[static_cast<std::size_t>(w)] = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }
}

FilterStageResult verdict_stage(Stage stage, const std::vector<std::string>& input_ids,
                                const std::vector<corpus::Bill>& bills,
                                CompletionProvider& provider, const std::string& tmpl,
                                const FilterOptions& options) {
    std::unordered_map<std::string, const corpus::Bill*> by_id;
    for (const auto& b : bills) by_id.emplace(b.bill_id, &b);

    std::vector<VerdictOutcome> outcomes(input_ids.size());
    parallel_for(input_ids.size(), options.concurrency, [&](std::size_t i) {
        const auto it = by_id.find(input_ids[i]);
        if (it == by_id.end()) {
            throw Error(errc::invalid_argument,
                        "filter stage: unknown bill id '" + input_ids[i] + "'");
        }
        CompletionRequest request;
        request.prompt = apply_template(
            tmpl, {{"summary", judged_text(*it->second, options.judge_translated)}});
        outcomes[i] = call_with_retries<VerdictOutcome>(
            provider, request, options, "bill " + input_ids[i],
            [](const std::string& response) -> std::optional<VerdictOutcome> {
                const auto verdict = parse_verdict(response);
                if (!verdict) return std::nullopt;
                return VerdictOutcome{*verdict, response};
            });
    });

    FilterStageResult result;
    result.stage = stage;
    result.prompt_template_used = tmpl;
    for (std::size_t i = 0; i < input_ids.size(); ++i) {
        result.rationale[input_ids[i]] = outcomes[i].response;
        if (outcomes[i].verdict == Verdict::relevant) {
            result.retained_bill_ids.push_back(input_ids[i]);
        }
    }
    return result;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

const char* to_string(Stage s) {
    switch (s) {
        case Stage::keyword: return "keyword";
        case Stage::sentence: return "sentence";
        case Stage::context: return "context";
    }
    return "?";
}

KeywordLexicon KeywordLexicon::from_counts(const std::map<std::string, long long>& counts,
                                           std::string language) {
    KeywordLexicon lex;
    lex.language = std::move(language);
    for (const auto& [keyword, frequency] : counts) {
        if (keyword.empty() || frequency < 1) {
            throw Error(errc::invalid_argument,
                        "lexicon: entry '" + keyword + "' with frequency " +
                            std::to_string(frequency));
        }
        lex.entries.push_back({keyword, frequency});
        lex.index_.insert(keyword);
    }
    std::sort(lex.entries.begin(), lex.entries.end(),
              [](const KeywordEntry& a, const KeywordEntry& b) {
                  if (a.frequency != b.frequency) return a.frequency > b.frequency;
                  return a.keyword < b.keyword;
              });
    return lex;
}

void translate_summaries(std::vector<corpus::Bill>& bills, CompletionProvider& provider,
                         const PromptSet& prompts, const FilterOptions& options) {
    if (bills.empty()) {
        throw Error(errc::invalid_argument, "translate_summaries: no bills");
    }
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < bills.size(); ++i) {
        if (!bills[i].summary_translated) pending.push_back(i);
    }
    std::vector<std::string> results(pending.size());
    parallel_for(pending.size(), options.concurrency, [&](std::size_t k) {
        const corpus::Bill& bill = bills[pending[k]];
        CompletionRequest request;
        request.prompt =
            apply_template(prompts.translation, {{"summary", bill.summary}});
        results[k] = call_with_retries<std::string>(
            provider, request, options, "bill " + bill.bill_id,
            [](const std::string& response) -> std::optional<std::string> {
                if (text::trim(response).empty()) return std::nullopt;
                return response;
            });
    });
    for (std::size_t k = 0; k < pending.size(); ++k) {
        bills[pending[k]].summary_translated = results[k];
    }
}

void skip_translation(std::vector<corpus::Bill>& bills) {
    for (auto& b : bills) {
        if (!b.summary_translated) b.summary_translated = b.summary;
    }
}

KeywordLexicon extract_keywords(const std::vector<corpus::Bill>& bills,
                                CompletionProvider& provider, const PromptSet& prompts,
                                const FilterOptions& options) {
    const auto batch = static_cast<std::size_t>(std::max(1, options.keyword_batch_size));
    const std::size_t n_batches = (bills.size() + batch - 1) / batch;

    std::vector<std::map<std::string, long long>> partial(n_batches);
    parallel_for(n_batches, options.concurrency, [&](std::size_t bi) {
        std::string documents;
        const std::size_t lo = bi * batch;
        const std::size_t hi = std::min(bills.size(), lo + batch);
        for (std::size_t i = lo; i < hi; ++i) {
            documents += "DOCUMENT " + std::to_string(i - lo + 1) + ": " +
                         judged_text(bills[i], true) + "\n";
        }
        CompletionRequest request;
        request.prompt =
            apply_template(prompts.keyword_extraction, {{"documents", documents}});
        partial[bi] = call_with_retries<std::map<std::string, long long>>(
            provider, request, options, "keyword batch " + std::to_string(bi + 1),
            [](const std::string& response)
                -> std::optional<std::map<std::string, long long>> {
                std::map<std::string, long long> counts;
                for (const auto& raw_line : text::split(response, '\n')) {
                    const std::string line = text::trim(raw_line);
                    if (line.empty()) continue;
                    const std::size_t colon = line.rfind(':');
                    if (colon == std::string::npos) return std::nullopt;
                    const std::string keyword =
                        text::fold_case(text::trim(line.substr(0, colon)));
                    const std::string count_str = text::trim(line.substr(colon + 1));
                    if (keyword.empty() || count_str.empty()) return std::nullopt;
                    long long count = 0;
                    for (const char c : count_str) {
                        if (c < '0' || c > '9') return std::nullopt;
                        count = count * 10 + (c - '0');
                    }
                    if (count < 1) return std::nullopt;
                    counts[keyword] += count;
                }
                return counts;
            });
    });

    std::map<std::string, long long> merged;
    for (const auto& counts : partial) {
        for (const auto& [keyword, count] : counts) merged[keyword] += count;
    }
    return KeywordLexicon::from_counts(merged);
}

FilterStageResult keyword_select(const std::vector<corpus::Bill>& bills,
                                 const KeywordLexicon& lexicon) {
    FilterStageResult result;
    result.stage = Stage::keyword;
    result.prompt_template_used = "(deterministic whole-token matching)";
    for (const auto& bill : bills) {
        for (const auto& tok : text::word_tokens(judged_text(bill, true))) {
            if (lexicon.contains(tok)) {
                result.retained_bill_ids.push_back(bill.bill_id);
                break;
            }
        }
    }
    return result;
}

KeywordProviderAudit keyword_select_with_provider(const std::vector<corpus::Bill>& bills,
                                                  const KeywordLexicon& lexicon,
                                                  CompletionProvider& provider,
                                                  const PromptSet& prompts,
                                                  const FilterOptions& options) {
    const FilterStageResult deterministic = keyword_select(bills, lexicon);
    std::unordered_set<std::string> deterministic_set(
        deterministic.retained_bill_ids.begin(), deterministic.retained_bill_ids.end());

    std::string keyword_lines;
    for (const auto& e : lexicon.entries) keyword_lines += e.keyword + "\n";

    std::vector<VerdictOutcome> outcomes(bills.size());
    parallel_for(bills.size(), options.concurrency, [&](std::size_t i) {
        CompletionRequest request;
        request.prompt = apply_template(
            prompts.keyword_selection,
            {{"keywords", keyword_lines}, {"summary", judged_text(bills[i], true)}});
        outcomes[i] = call_with_retries<VerdictOutcome>(
            provider, request, options, "bill " + bills[i].bill_id,
            [](const std::string& response) -> std::optional<VerdictOutcome> {
                const auto verdict = parse_verdict(response);
                if (!verdict) return std::nullopt;
                return VerdictOutcome{*verdict, response};
            });
    });

    KeywordProviderAudit audit;
    audit.result.stage = Stage::keyword;
    audit.result.prompt_template_used = prompts.keyword_selection;
    for (std::size_t i = 0; i < bills.size(); ++i) {
        const std::string& id = bills[i].bill_id;
        const bool by_provider = outcomes[i].verdict == Verdict::relevant;
        const bool by_matching = deterministic_set.count(id) != 0;
        audit.result.rationale[id] = outcomes[i].response;
        if (by_provider || by_matching) audit.result.retained_bill_ids.push_back(id);
        if (by_provider && !by_matching) audit.provider_only.push_back(id);
        if (!by_provider && by_matching) audit.missed_by_provider.push_back(id);
    }
    return audit;
}

FilterStageResult sentence_select(const FilterStageResult& keyword_stage,
                                  const std::vector<corpus::Bill>& bills,
                                  CompletionProvider& provider, const PromptSet& prompts,
                                  const FilterOptions& options) {
    return verdict_stage(Stage::sentence, keyword_stage.retained_bill_ids, bills,
                         provider, prompts.sentence_selection, options);
}

FilterStageResult context_select(const FilterStageResult& sentence_stage,
                                 const std::vector<corpus::Bill>& bills,
                                 CompletionProvider& provider, const PromptSet& prompts,
                                 const FilterOptions& options) {
    return verdict_stage(Stage::context, sentence_stage.retained_bill_ids, bills,
                         provider, prompts.context_selection, options);
}

AuditSample draw_audit_sample(const FilterStageResult& result, double fraction,
                              std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(errc::invalid_argument, "audit sample: fraction must be in (0,1]");
    }
    AuditSample sample;
    sample.stage = result.stage;
    sample.sample_seed = seed;
    sample.fraction = fraction;
    const std::size_t n = result.retained_bill_ids.size();
    if (n == 0) return sample;
    const auto k = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n) - 1e-12));
    Rng rng(seed);
    auto picked = rng.sample_without_replacement(n, std::max<std::size_t>(k, 1));
    std::sort(picked.begin(), picked.end());
    for (const std::size_t i : picked) {
        sample.sampled_bill_ids.push_back(result.retained_bill_ids[i]);
    }
    return sample;
}

csv::Table audit_worksheet(const AuditSample& sample, const FilterStageResult& result,
                           const std::vector<corpus::Bill>& bills) {
    std::unordered_map<std::string, const corpus::Bill*> by_id;
    for (const auto& b : bills) by_id.emplace(b.bill_id, &b);
    csv::Table t;
    t.header = {"stage", "bill_id", "title", "summary", "provider_rationale",
                "reviewer_verdict"};
    for (const auto& id : sample.sampled_bill_ids) {
        const auto bit = by_id.find(id);
        const auto rit = result.rationale.find(id);
        t.rows.push_back({to_string(sample.stage), id,
                          bit != by_id.end() ? bit->second->title : "",
                          bit != by_id.end() ? bit->second->summary : "",
                          rit != result.rationale.end() ? rit->second : "", ""});
    }
    return t;
}

FunnelReport funnel_report(std::size_t initial_count,
                           const std::vector<std::pair<std::string, std::size_t>>& stages) {
    FunnelReport report;
    report.initial_count = initial_count;
    std::size_t previous = initial_count;
    for (const auto& [name, count] : stages) {
        if (count > previous) {
            throw Error(errc::invalid_argument,
                        "funnel: stage '" + name + "' count " + std::to_string(count) +
                            " exceeds previous " + std::to_string(previous));
        }
        FunnelStage stage;
        stage.name = name;
        stage.count = count;
        stage.retention_pct =
            initial_count == 0
                ? 0.0
                : round1(100.0 * static_cast<double>(count) /
                         static_cast<double>(initial_count));
        report.stages.push_back(std::move(stage));
        previous = count;
    }
    const std::size_t final_count = stages.empty() ? initial_count : stages.back().second;
    report.total_reduction_pct =
        initial_count == 0
            ? 0.0
            : round1(100.0 * (1.0 - static_cast<double>(final_count) /
                                        static_cast<double>(initial_count)));
    return report;
}

csv::Table funnel_table(const FunnelReport& report) {
    csv::Table t;
    t.header = {"stage", "count", "retention_pct"};
    t.rows.push_back({"initial", std::to_string(report.initial_count), "100.0"});
    for (const auto& s : report.stages) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", s.retention_pct);
        t.rows.push_back({s.name, std::to_string(s.count), buf});
    }
    return t;
}

std::string funnel_text(const FunnelReport& report) {
    std::string out = "initial: " + std::to_string(report.initial_count) + "\n";
    for (const auto& s : report.stages) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", s.retention_pct);
        out += s.name + ": " + std::to_string(s.count) + " (" + buf + "%)\n";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", report.total_reduction_pct);
    out += "total reduction: " + std::string(buf) + "%\n";
    return out;
}

std::vector<KeywordFrequencyRow> keyword_frequency_table(const KeywordLexicon& lexicon) {
    if (lexicon.empty()) {
        throw Error(errc::invalid_argument, "keyword_frequency_table: empty lexicon");
    }
    const double max_count = static_cast<double>(lexicon.entries.front().frequency);
    std::vector<KeywordFrequencyRow> rows;
    rows.reserve(lexicon.entries.size());
    for (const auto& e : lexicon.entries) {
        rows.push_back({e.keyword, e.frequency,
                        static_cast<double>(e.frequency) / max_count});
    }
    return rows;
}

csv::Table keyword_frequency_csv(const std::vector<KeywordFrequencyRow>& rows) {
    csv::Table t;
    t.header = {"keyword", "count", "weight"};
    for (const auto& r : rows) {
        t.rows.push_back({r.keyword, std::to_string(r.count), csv::format_double(r.weight)});
    }
    return t;
}

csv::Table lexicon_table(const KeywordLexicon& lexicon) {
    csv::Table t;
    t.header = {"keyword", "frequency"};
    for (const auto& e : lexicon.entries) {
        t.rows.push_back({e.keyword, std::to_string(e.frequency)});
    }
    return t;
}

KeywordLexicon lexicon_from_table(const csv::Table& table) {
    std::map<std::string, long long> counts;
    const std::size_t kw = table.column("keyword");
    const std::size_t freq = table.column("frequency");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        counts[table.rows[r][kw]] +=
            csv::parse_int(table.rows[r][freq], r + 1, "frequency");
    }
    return KeywordLexicon::from_counts(counts);
}

csv::Table stage_result_table(const FilterStageResult& result) {
    csv::Table t;
    t.header = {"bill_id", "rationale"};
    for (const auto& id : result.retained_bill_ids) {
        const auto it = result.rationale.find(id);
        t.rows.push_back({id, it != result.rationale.end() ? it->second : ""});
    }
    return t;
}

}  // namespace legigpt::filter
