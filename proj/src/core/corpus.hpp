#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace legigpt::corpus {

enum class StageOutcome { passed, dropped, pending };
enum class Ideology { conservative, progressive };
enum class Gender { male, female };
enum class ElectionType { constituency, proportional };

const char* to_string(StageOutcome v);
const char* to_string(Ideology v);
const char* to_string(Gender v);
const char* to_string(ElectionType v);

/// One legislative proposal. `approved` is derived from the plenary
/// outcome and kept in sync by the loaders and the generator.
struct Bill {
    std::string bill_id;
    std::string title;
    std::string summary;
    std::optional<std::string> summary_translated;
    std::string sponsor_id;
    std::vector<std::string> cosponsor_ids;
    StageOutcome committee_outcome = StageOutcome::pending;
    StageOutcome ljc_outcome = StageOutcome::pending;
    StageOutcome plenary_outcome = StageOutcome::pending;
    bool approved = false;
};

struct Legislator {
    std::string legislator_id;
    Ideology ideology = Ideology::progressive;
    Gender gender = Gender::male;
    ElectionType election_type = ElectionType::constituency;
    bool on_transport_committee = false;
    int terms_elected = 1;
    std::optional<std::string> constituency_id;  // absent iff proportional
};

struct Constituency {
    std::string constituency_id;
    long long electoral_population = 0;
    long long votes = 0;
    long long invalid_votes = 0;
    double area_km2 = 0.0;
};

struct ValidationFinding {
    std::string table;    // bills | legislators | constituencies
    std::string locator;  // record key, or "row N" when keyless
    std::string rule;
};

struct CorpusValidationReport {
    std::vector<ValidationFinding> errors;
    std::vector<ValidationFinding> warnings;
    std::size_t bill_count = 0;
    std::size_t legislator_count = 0;
    std::size_t constituency_count = 0;

    bool admissible() const { return errors.empty(); }
};

std::vector<Bill> load_bills(const std::filesystem::path& path);
std::vector<Legislator> load_legislators(const std::filesystem::path& path);
std::vector<Constituency> load_constituencies(const std::filesystem::path& path);

void write_bills(const std::filesystem::path& path, const std::vector<Bill>& bills);
void write_legislators(const std::filesystem::path& path,
                       const std::vector<Legislator>& legislators);
void write_constituencies(const std::filesystem::path& path,
                          const std::vector<Constituency>& constituencies);

/// Checks referential integrity, key uniqueness, and every type invariant.
/// Findings are data, not failures; they come back sorted by
/// (table, locator, rule) regardless of input order.
CorpusValidationReport validate_corpus(const std::vector<Bill>& bills,
                                       const std::vector<Legislator>& legislators,
                                       const std::vector<Constituency>& constituencies);

/// Renders the report as line-oriented text (one finding per line).
std::string report_text(const CorpusValidationReport& report);

}  // namespace legigpt::corpus
