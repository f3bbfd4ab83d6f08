#pragma once

#include <string>
#include <vector>

#include "core/corpus.hpp"
#include "core/csv.hpp"
#include "core/dataset.hpp"

namespace legigpt::features {

enum class Role { sponsor, cosponsor };

/// One (bill, legislator) sponsorship instance; the unit of analysis.
struct ParticipationRecord {
    std::string bill_id;
    std::string legislator_id;
    Role role = Role::cosponsor;
};

inline constexpr std::size_t kFeatureCount = 19;

/// Fixed feature order; the names are part of the emitted-table interface.
const std::vector<std::string>& feature_names();

/// Expands bills into participation records: the sponsor first, then
/// cosponsors in listed order, bill order preserved.
std::vector<ParticipationRecord> build_participation(
    const std::vector<corpus::Bill>& filtered_bills,
    const std::vector<corpus::Legislator>& legislators);

/// Builds the numeric matrix plus party labels (1 = conservative,
/// 0 = progressive). Bill-level aggregates count all participants of the
/// bill, including the row's own legislator. Constituency features are
/// missing (NaN) for proportional-representation members. Setting
/// include_approval = false drops the approval column entirely (18-column
/// matrix) for leakage-sensitivity runs.
models::LabeledMatrix build_feature_matrix(
    const std::vector<ParticipationRecord>& records,
    const std::vector<corpus::Bill>& bills,
    const std::vector<corpus::Legislator>& legislators,
    const std::vector<corpus::Constituency>& constituencies,
    bool include_approval = true);

/// Participation-level descriptive statistics: categorical counts and
/// record-level means, mirroring the emitted summary table's row set.
struct DescriptiveStats {
    std::size_t total = 0;

    std::size_t ideology_conservative = 0;
    std::size_t ideology_progressive = 0;
    std::size_t gender_male = 0;
    std::size_t gender_female = 0;
    std::size_t election_constituency = 0;
    std::size_t election_proportional = 0;
    std::size_t committee_transport = 0;
    std::size_t committee_other = 0;
    std::size_t role_sponsor = 0;
    std::size_t role_cosponsor = 0;
    std::size_t approval_accept = 0;
    std::size_t approval_reject = 0;

    double mean_terms_elected = 0.0;

    // over records whose legislator has constituency data
    std::size_t constituency_records = 0;
    double mean_electoral_population = 0.0;
    double mean_votes = 0.0;
    double mean_invalid_votes = 0.0;
    double mean_area_km2 = 0.0;

    // bill attributes averaged over records
    double mean_n_sponsors = 0.0;
    double mean_n_conservative_sponsors = 0.0;
    double mean_n_progressive_sponsors = 0.0;
    double mean_pct_conservative_sponsors = 0.0;
    double mean_pct_progressive_sponsors = 0.0;
    double mean_avg_terms_elected = 0.0;
    double mean_n_male_sponsors = 0.0;
    double mean_n_female_sponsors = 0.0;
    double mean_pct_male_sponsors = 0.0;
    double mean_pct_female_sponsors = 0.0;
};

DescriptiveStats describe(const std::vector<ParticipationRecord>& records,
                          const std::vector<corpus::Bill>& bills,
                          const std::vector<corpus::Legislator>& legislators,
                          const std::vector<corpus::Constituency>& constituencies);

csv::Table stats_table(const DescriptiveStats& stats);
std::string stats_text(const DescriptiveStats& stats);

csv::Table participation_table(const std::vector<ParticipationRecord>& records);

}  // namespace legigpt::features
