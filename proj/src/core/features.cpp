#include "core/features.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/tree.hpp"

namespace legigpt::features {

using corpus::Bill;
using corpus::Constituency;
using corpus::ElectionType;
using corpus::Gender;
using corpus::Ideology;
using corpus::Legislator;

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> kNames = {
        "gender",
        "election_type",
        "committee_type",
        "terms_elected",
        "electoral_population",
        "votes",
        "invalid_votes",
        "area_km2",
        "n_sponsors",
        "n_conservative_sponsors",
        "n_progressive_sponsors",
        "pct_conservative_sponsors",
        "pct_progressive_sponsors",
        "avg_terms_elected",
        "n_male_sponsors",
        "n_female_sponsors",
        "pct_male_sponsors",
        "pct_female_sponsors",
        "approval",
    };
    return kNames;
}

std::vector<ParticipationRecord> build_participation(
    const std::vector<Bill>& filtered_bills, const std::vector<Legislator>& legislators) {
    std::unordered_map<std::string, const Legislator*> by_id;
    for (const auto& l : legislators) by_id.emplace(l.legislator_id, &l);

    std::vector<ParticipationRecord> records;
    for (const auto& b : filtered_bills) {
        if (!by_id.count(b.sponsor_id)) {
            throw Error(errc::invalid_argument, "bill " + b.bill_id +
                                                    ": unresolved sponsor '" +
                                                    b.sponsor_id + "'");
        }
        records.push_back({b.bill_id, b.sponsor_id, Role::sponsor});
        for (const auto& id : b.cosponsor_ids) {
            if (!by_id.count(id)) {
                throw Error(errc::invalid_argument,
                            "bill " + b.bill_id + ": unresolved cosponsor '" + id + "'");
            }
            records.push_back({b.bill_id, id, Role::cosponsor});
        }
    }
    return records;
}

namespace {

struct BillAggregate {
    double n = 0.0;
    double n_conservative = 0.0;
    double n_male = 0.0;
    double terms_sum = 0.0;
    bool approved = false;
};

std::unordered_map<std::string, BillAggregate> aggregate_bills(
    const std::vector<Bill>& bills,
    const std::unordered_map<std::string, const Legislator*>& by_id) {
    std::unordered_map<std::string, BillAggregate> out;
    for (const auto& b : bills) {
        BillAggregate agg;
        agg.approved = b.approved;
        auto add = [&](const std::string& id) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw Error(errc::invalid_argument,
                            "bill " + b.bill_id + ": unresolved participant '" + id + "'");
            }
            const Legislator& l = *it->second;
            agg.n += 1.0;
            if (l.ideology == Ideology::conservative) agg.n_conservative += 1.0;
            if (l.gender == Gender::male) agg.n_male += 1.0;
            agg.terms_sum += static_cast<double>(l.terms_elected);
        };
        add(b.sponsor_id);
        for (const auto& id : b.cosponsor_ids) add(id);
        out.emplace(b.bill_id, agg);
    }
    return out;
}

}  // namespace

models::LabeledMatrix build_feature_matrix(
    const std::vector<ParticipationRecord>& records, const std::vector<Bill>& bills,
    const std::vector<Legislator>& legislators,
    const std::vector<Constituency>& constituencies, bool include_approval) {
    if (records.empty()) {
        throw Error(errc::invalid_argument, "build_feature_matrix: no participation records");
    }
    std::unordered_map<std::string, const Legislator*> leg_by_id;
    for (const auto& l : legislators) leg_by_id.emplace(l.legislator_id, &l);
    std::unordered_map<std::string, const Constituency*> con_by_id;
    for (const auto& c : constituencies) con_by_id.emplace(c.constituency_id, &c);
    const auto bill_aggs = aggregate_bills(bills, leg_by_id);

    models::LabeledMatrix matrix;
    matrix.column_names = feature_names();
    if (!include_approval) matrix.column_names.pop_back();
    matrix.n_cols = matrix.column_names.size();

    std::vector<double> row(kFeatureCount);
    for (const auto& rec : records) {
        const auto lit = leg_by_id.find(rec.legislator_id);
        if (lit == leg_by_id.end()) {
            throw Error(errc::invalid_argument,
                        "record " + rec.bill_id + "/" + rec.legislator_id +
                            ": unresolved legislator");
        }
        const Legislator& l = *lit->second;
        const auto bit = bill_aggs.find(rec.bill_id);
        if (bit == bill_aggs.end()) {
            throw Error(errc::invalid_argument,
                        "record " + rec.bill_id + "/" + rec.legislator_id +
                            ": bill not in the filtered set");
        }
        const BillAggregate& agg = bit->second;

        row[0] = l.gender == Gender::male ? 1.0 : 0.0;
        row[1] = l.election_type == ElectionType::constituency ? 1.0 : 0.0;
        row[2] = l.on_transport_committee ? 1.0 : 0.0;
        row[3] = static_cast<double>(l.terms_elected);
        if (l.election_type == ElectionType::constituency) {
            const auto cit = con_by_id.find(*l.constituency_id);
            if (cit == con_by_id.end()) {
                throw Error(errc::invalid_argument,
                            "legislator " + l.legislator_id +
                                ": missing constituency '" + *l.constituency_id + "'");
            }
            const Constituency& c = *cit->second;
            row[4] = static_cast<double>(c.electoral_population);
            row[5] = static_cast<double>(c.votes);
            row[6] = static_cast<double>(c.invalid_votes);
            row[7] = c.area_km2;
        } else {
            row[4] = models::kMissing;
            row[5] = models::kMissing;
            row[6] = models::kMissing;
            row[7] = models::kMissing;
        }
        row[8] = agg.n;
        row[9] = agg.n_conservative;
        row[10] = agg.n - agg.n_conservative;
        row[11] = agg.n_conservative / agg.n;
        row[12] = (agg.n - agg.n_conservative) / agg.n;
        row[13] = agg.terms_sum / agg.n;
        row[14] = agg.n_male;
        row[15] = agg.n - agg.n_male;
        row[16] = agg.n_male / agg.n;
        row[17] = (agg.n - agg.n_male) / agg.n;
        row[18] = agg.approved ? 1.0 : 0.0;

        matrix.push_row(std::span(row.data(), matrix.n_cols),
                        l.ideology == Ideology::conservative ? 1 : 0, rec.bill_id,
                        rec.legislator_id);
    }
    return matrix;
}

DescriptiveStats describe(const std::vector<ParticipationRecord>& records,
                          const std::vector<Bill>& bills,
                          const std::vector<Legislator>& legislators,
                          const std::vector<Constituency>& constituencies) {
    DescriptiveStats s;
    s.total = records.size();
    if (records.empty()) return s;

    std::unordered_map<std::string, const Legislator*> leg_by_id;
    for (const auto& l : legislators) leg_by_id.emplace(l.legislator_id, &l);
    std::unordered_map<std::string, const Constituency*> con_by_id;
    for (const auto& c : constituencies) con_by_id.emplace(c.constituency_id, &c);
    const auto bill_aggs = aggregate_bills(bills, leg_by_id);

    double terms_sum = 0.0;
    double pop_sum = 0.0, votes_sum = 0.0, invalid_sum = 0.0, area_sum = 0.0;
    double ns_sum = 0.0, nc_sum = 0.0, np_sum = 0.0, pc_sum = 0.0, pp_sum = 0.0;
    double avg_terms_sum = 0.0, nm_sum = 0.0, nf_sum = 0.0, pm_sum = 0.0, pf_sum = 0.0;

    for (const auto& rec : records) {
        const auto lit = leg_by_id.find(rec.legislator_id);
        if (lit == leg_by_id.end()) {
            throw Error(errc::invalid_argument,
                        "describe: unresolved legislator '" + rec.legislator_id + "'");
        }
        const Legislator& l = *lit->second;
        const auto bit = bill_aggs.find(rec.bill_id);
        if (bit == bill_aggs.end()) {
            throw Error(errc::invalid_argument,
                        "describe: unresolved bill '" + rec.bill_id + "'");
        }
        const BillAggregate& agg = bit->second;

        (l.ideology == Ideology::conservative ? s.ideology_conservative
                                              : s.ideology_progressive)++;
        (l.gender == Gender::male ? s.gender_male : s.gender_female)++;
        (l.election_type == ElectionType::constituency ? s.election_constituency
                                                       : s.election_proportional)++;
        (l.on_transport_committee ? s.committee_transport : s.committee_other)++;
        (rec.role == Role::sponsor ? s.role_sponsor : s.role_cosponsor)++;
        (agg.approved ? s.approval_accept : s.approval_reject)++;

        terms_sum += static_cast<double>(l.terms_elected);
        if (l.election_type == ElectionType::constituency) {
            const auto cit = con_by_id.find(*l.constituency_id);
            if (cit == con_by_id.end()) {
                throw Error(errc::invalid_argument,
                            "describe: missing constituency '" + *l.constituency_id + "'");
            }
            ++s.constituency_records;
            pop_sum += static_cast<double>(cit->second->electoral_population);
            votes_sum += static_cast<double>(cit->second->votes);
            invalid_sum += static_cast<double>(cit->second->invalid_votes);
            area_sum += cit->second->area_km2;
        }
        ns_sum += agg.n;
        nc_sum += agg.n_conservative;
        np_sum += agg.n - agg.n_conservative;
        pc_sum += agg.n_conservative / agg.n;
        pp_sum += (agg.n - agg.n_conservative) / agg.n;
        avg_terms_sum += agg.terms_sum / agg.n;
        nm_sum += agg.n_male;
        nf_sum += agg.n - agg.n_male;
        pm_sum += agg.n_male / agg.n;
        pf_sum += (agg.n - agg.n_male) / agg.n;
    }

    const double n = static_cast<double>(s.total);
    s.mean_terms_elected = terms_sum / n;
    if (s.constituency_records > 0) {
        const double cn = static_cast<double>(s.constituency_records);
        s.mean_electoral_population = pop_sum / cn;
        s.mean_votes = votes_sum / cn;
        s.mean_invalid_votes = invalid_sum / cn;
        s.mean_area_km2 = area_sum / cn;
    }
    s.mean_n_sponsors = ns_sum / n;
    s.mean_n_conservative_sponsors = nc_sum / n;
    s.mean_n_progressive_sponsors = np_sum / n;
    s.mean_pct_conservative_sponsors = pc_sum / n;
    s.mean_pct_progressive_sponsors = pp_sum / n;
    s.mean_avg_terms_elected = avg_terms_sum / n;
    s.mean_n_male_sponsors = nm_sum / n;
    s.mean_n_female_sponsors = nf_sum / n;
    s.mean_pct_male_sponsors = pm_sum / n;
    s.mean_pct_female_sponsors = pf_sum / n;
    return s;
}

csv::Table stats_table(const DescriptiveStats& s) {
    csv::Table t;
    t.header = {"category", "item", "count", "mean"};
    auto count_row = [&](const char* cat, const char* item, std::size_t v) {
        t.rows.push_back({cat, item, std::to_string(v), ""});
    };
    auto mean_row = [&](const char* cat, const char* item, double v) {
        t.rows.push_back({cat, item, "", csv::format_double(v)});
    };
    count_row("total", "participation_records", s.total);
    count_row("legislator", "ideology_conservative", s.ideology_conservative);
    count_row("legislator", "ideology_progressive", s.ideology_progressive);
    count_row("legislator", "gender_male", s.gender_male);
    count_row("legislator", "gender_female", s.gender_female);
    count_row("legislator", "election_constituency", s.election_constituency);
    count_row("legislator", "election_proportional", s.election_proportional);
    count_row("legislator", "committee_transport", s.committee_transport);
    count_row("legislator", "committee_other", s.committee_other);
    count_row("legislator", "role_sponsor", s.role_sponsor);
    count_row("legislator", "role_cosponsor", s.role_cosponsor);
    mean_row("legislator", "terms_elected", s.mean_terms_elected);
    mean_row("constituency", "electoral_population", s.mean_electoral_population);
    mean_row("constituency", "votes", s.mean_votes);
    mean_row("constituency", "invalid_votes", s.mean_invalid_votes);
    mean_row("constituency", "area_km2", s.mean_area_km2);
    mean_row("bill", "n_sponsors", s.mean_n_sponsors);
    mean_row("bill", "n_conservative_sponsors", s.mean_n_conservative_sponsors);
    mean_row("bill", "n_progressive_sponsors", s.mean_n_progressive_sponsors);
    mean_row("bill", "pct_conservative_sponsors", s.mean_pct_conservative_sponsors);
    mean_row("bill", "pct_progressive_sponsors", s.mean_pct_progressive_sponsors);
    mean_row("bill", "avg_terms_elected", s.mean_avg_terms_elected);
    mean_row("bill", "n_male_sponsors", s.mean_n_male_sponsors);
    mean_row("bill", "n_female_sponsors", s.mean_n_female_sponsors);
    mean_row("bill", "pct_male_sponsors", s.mean_pct_male_sponsors);
    mean_row("bill", "pct_female_sponsors", s.mean_pct_female_sponsors);
    count_row("bill", "approval_accept", s.approval_accept);
    count_row("bill", "approval_reject", s.approval_reject);
    return t;
}

std::string stats_text(const DescriptiveStats& s) {
    std::ostringstream out;
    const csv::Table t = stats_table(s);
    for (const auto& row : t.rows) {
        out << row[0] << " / " << row[1] << ": " << (row[2].empty() ? row[3] : row[2])
            << "\n";
    }
    return out.str();
}

csv::Table participation_table(const std::vector<ParticipationRecord>& records) {
    csv::Table t;
    t.header = {"bill_id", "legislator_id", "role"};
    for (const auto& r : records) {
        t.rows.push_back(
            {r.bill_id, r.legislator_id, r.role == Role::sponsor ? "sponsor" : "cosponsor"});
    }
    return t;
}

}  // namespace legigpt::features
