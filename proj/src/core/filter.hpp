#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "core/corpus.hpp"
#include "core/csv.hpp"
#include "core/prompts.hpp"
#include "core/provider.hpp"

namespace legigpt::filter {

struct KeywordEntry {
    std::string keyword;  // case-folded
    long long frequency = 0;
};

/// Keyword lexicon: unique case-folded entries sorted by
/// (frequency desc, keyword asc).
struct KeywordLexicon {
    std::vector<KeywordEntry> entries;
    std::string language = "en";

    bool contains(const std::string& folded_token) const {
        return index_.count(folded_token) != 0;
    }
    bool empty() const { return entries.empty(); }

    static KeywordLexicon from_counts(const std::map<std::string, long long>& counts,
                                      std::string language = "en");

private:
    std::unordered_set<std::string> index_;
};

enum class Stage { keyword, sentence, context };
const char* to_string(Stage s);

struct FilterStageResult {
    Stage stage = Stage::keyword;
    std::vector<std::string> retained_bill_ids;            // input order
    std::map<std::string, std::string> rationale;          // bill_id -> provider text
    std::string prompt_template_used;
};

struct FilterOptions {
    int keyword_batch_size = 20;
    /// Stages 2-3 judge the translated text by default; false switches
    /// them to the source summaries.
    bool judge_translated = true;
    int concurrency = 1;
    int max_attempts = 3;
    double backoff_seconds = 1.0;  // doubles per retry; 0 disables sleeping
};

/// Fills summary_translated for every bill that lacks one. Bills already
/// carrying a translation are left untouched. An empty provider response
/// aborts the stage naming the bill.
void translate_summaries(std::vector<corpus::Bill>& bills, CompletionProvider& provider,
                         const PromptSet& prompts, const FilterOptions& options = {});

/// Copies the source summary into summary_translated for corpora that are
/// already in the target language.
void skip_translation(std::vector<corpus::Bill>& bills);

/// Word-frequency keyword extraction over the translated summaries,
/// batched up to keyword_batch_size documents per request. Responses must
/// follow the "noun: count" line grammar.
KeywordLexicon extract_keywords(const std::vector<corpus::Bill>& bills,
                                CompletionProvider& provider, const PromptSet& prompts,
                                const FilterOptions& options = {});

/// Canonical deterministic keyword stage: retains exactly the bills whose
/// translated summary contains at least one lexicon keyword under
/// case-folded whole-token matching. No provider involved.
FilterStageResult keyword_select(const std::vector<corpus::Bill>& bills,
                                 const KeywordLexicon& lexicon);

/// Optional provider-backed keyword stage for fidelity experiments: the
/// result is the union of provider verdicts with the deterministic
/// matches (so it is always a superset), and disagreements are returned
/// for auditing.
struct KeywordProviderAudit {
    FilterStageResult result;
    std::vector<std::string> provider_only;  // retained by provider, not by matching
    std::vector<std::string> missed_by_provider;
};
KeywordProviderAudit keyword_select_with_provider(const std::vector<corpus::Bill>& bills,
                                                  const KeywordLexicon& lexicon,
                                                  CompletionProvider& provider,
                                                  const PromptSet& prompts,
                                                  const FilterOptions& options = {});

FilterStageResult sentence_select(const FilterStageResult& keyword_stage,
                                  const std::vector<corpus::Bill>& bills,
                                  CompletionProvider& provider, const PromptSet& prompts,
                                  const FilterOptions& options = {});

FilterStageResult context_select(const FilterStageResult& sentence_stage,
                                 const std::vector<corpus::Bill>& bills,
                                 CompletionProvider& provider, const PromptSet& prompts,
                                 const FilterOptions& options = {});

struct AuditSample {
    Stage stage = Stage::keyword;
    std::vector<std::string> sampled_bill_ids;  // input order
    std::uint64_t sample_seed = 0;
    double fraction = 0.10;
};

/// Uniform sample without replacement of ceil(fraction * retained).
AuditSample draw_audit_sample(const FilterStageResult& result, double fraction,
                              std::uint64_t seed);

csv::Table audit_worksheet(const AuditSample& sample, const FilterStageResult& result,
                           const std::vector<corpus::Bill>& bills);

struct FunnelStage {
    std::string name;
    std::size_t count = 0;
    double retention_pct = 0.0;  // of the initial corpus, one decimal
};

struct FunnelReport {
    std::size_t initial_count = 0;
    std::vector<FunnelStage> stages;
    double total_reduction_pct = 0.0;  // one decimal
};

FunnelReport funnel_report(std::size_t initial_count,
                           const std::vector<std::pair<std::string, std::size_t>>& stages);

csv::Table funnel_table(const FunnelReport& report);
std::string funnel_text(const FunnelReport& report);

struct KeywordFrequencyRow {
    std::string keyword;
    long long count = 0;
    double weight = 0.0;  // count / max count, in (0,1]
};

/// Plot-ready word-frequency table; requires a nonempty lexicon.
std::vector<KeywordFrequencyRow> keyword_frequency_table(const KeywordLexicon& lexicon);

csv::Table keyword_frequency_csv(const std::vector<KeywordFrequencyRow>& rows);
csv::Table lexicon_table(const KeywordLexicon& lexicon);
KeywordLexicon lexicon_from_table(const csv::Table& table);
csv::Table stage_result_table(const FilterStageResult& result);

}  // namespace legigpt::filter
