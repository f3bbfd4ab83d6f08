#include "core/corpus.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/text.hpp"

namespace legigpt::corpus {

namespace {

const std::vector<std::string> kBillHeader = {
    "bill_id",       "title",         "summary",
    "summary_translated", "sponsor_id", "cosponsor_ids",
    "committee_outcome",  "ljc_outcome", "plenary_outcome"};

const std::vector<std::string> kLegislatorHeader = {
    "legislator_id", "ideology",      "gender",         "election_type",
    "on_transport_committee", "terms_elected", "constituency_id"};

const std::vector<std::string> kConstituencyHeader = {
    "constituency_id", "electoral_population", "votes", "invalid_votes",
    "area_km2"};

void require_header(const csv::Table& t, const std::vector<std::string>& expected,
                    const std::filesystem::path& path) {
    if (t.header != expected) {
        std::string want;
        for (const auto& h : expected) {
            if (!want.empty()) want += ",";
            want += h;
        }
        throw Error(errc::parse,
                    path.string() + ": unexpected header, expected: " + want);
    }
}

[[noreturn]] void row_error(const std::filesystem::path& path, std::size_t row,
                            const std::string& what) {
    throw Error(errc::parse,
                path.string() + ": row " + std::to_string(row) + ": " + what);
}

StageOutcome parse_outcome(const std::string& s, const std::filesystem::path& path,
                           std::size_t row, const char* col) {
    if (s == "passed") return StageOutcome::passed;
    if (s == "dropped") return StageOutcome::dropped;
    if (s == "pending") return StageOutcome::pending;
    row_error(path, row, std::string("column '") + col + "': unknown outcome '" + s + "'");
}

template <typename T>
void check_unique_key(std::unordered_set<std::string>& seen, const std::string& key,
                      const std::filesystem::path& path, std::size_t row, const char* what) {
    if (!seen.insert(key).second) {
        row_error(path, row, std::string("duplicate ") + what + " '" + key + "'");
    }
}

}  // namespace

const char* to_string(StageOutcome v) {
    switch (v) {
        case StageOutcome::passed: return "passed";
        case StageOutcome::dropped: return "dropped";
        case StageOutcome::pending: return "pending";
    }
    return "?";
}

const char* to_string(Ideology v) {
    return v == Ideology::conservative ? "conservative" : "progressive";
}

const char* to_string(Gender v) { return v == Gender::male ? "male" : "female"; }

const char* to_string(ElectionType v) {
    return v == ElectionType::constituency ? "constituency" : "proportional";
}

std::vector<Bill> load_bills(const std::filesystem::path& path) {
    const csv::Table t = csv::read_file(path);
    require_header(t, kBillHeader, path);
    std::vector<Bill> bills;
    bills.reserve(t.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t rowno = r + 1;
        Bill b;
        b.bill_id = row[0];
        if (b.bill_id.empty()) row_error(path, rowno, "column 'bill_id': empty key");
        check_unique_key<Bill>(seen, b.bill_id, path, rowno, "bill_id");
        b.title = row[1];
        b.summary = row[2];
        if (!row[3].empty()) b.summary_translated = row[3];
        b.sponsor_id = row[4];
        if (b.sponsor_id.empty()) row_error(path, rowno, "column 'sponsor_id': empty key");
        if (!row[5].empty()) {
            for (auto& id : text::split(row[5], ';')) {
                if (id.empty()) {
                    row_error(path, rowno, "column 'cosponsor_ids': empty id in list");
                }
                b.cosponsor_ids.push_back(std::move(id));
            }
        }
        b.committee_outcome = parse_outcome(row[6], path, rowno, "committee_outcome");
        b.ljc_outcome = parse_outcome(row[7], path, rowno, "ljc_outcome");
        b.plenary_outcome = parse_outcome(row[8], path, rowno, "plenary_outcome");
        b.approved = b.plenary_outcome == StageOutcome::passed;
        bills.push_back(std::move(b));
    }
    return bills;
}

std::vector<Legislator> load_legislators(const std::filesystem::path& path) {
    const csv::Table t = csv::read_file(path);
    require_header(t, kLegislatorHeader, path);
    std::vector<Legislator> out;
    out.reserve(t.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t rowno = r + 1;
        Legislator l;
        l.legislator_id = row[0];
        if (l.legislator_id.empty()) row_error(path, rowno, "column 'legislator_id': empty key");
        check_unique_key<Legislator>(seen, l.legislator_id, path, rowno, "legislator_id");
        if (row[1] == "conservative") l.ideology = Ideology::conservative;
        else if (row[1] == "progressive") l.ideology = Ideology::progressive;
        else row_error(path, rowno, "column 'ideology': unknown value '" + row[1] + "'");
        if (row[2] == "male") l.gender = Gender::male;
        else if (row[2] == "female") l.gender = Gender::female;
        else row_error(path, rowno, "column 'gender': unknown value '" + row[2] + "'");
        if (row[3] == "constituency") l.election_type = ElectionType::constituency;
        else if (row[3] == "proportional") l.election_type = ElectionType::proportional;
        else row_error(path, rowno, "column 'election_type': unknown value '" + row[3] + "'");
        if (row[4] == "true") l.on_transport_committee = true;
        else if (row[4] == "false") l.on_transport_committee = false;
        else row_error(path, rowno, "column 'on_transport_committee': expected true/false");
        const long long terms = csv::parse_int(row[5], rowno, "terms_elected");
        if (terms < 1) row_error(path, rowno, "column 'terms_elected': must be >= 1");
        l.terms_elected = static_cast<int>(terms);
        if (l.election_type == ElectionType::proportional) {
            if (!row[6].empty()) {
                row_error(path, rowno,
                          "column 'constituency_id': must be empty for proportional "
                          "legislators");
            }
        } else {
            if (row[6].empty()) {
                row_error(path, rowno,
                          "column 'constituency_id': required for constituency-elected "
                          "legislators");
            }
            l.constituency_id = row[6];
        }
        out.push_back(std::move(l));
    }
    return out;
}

std::vector<Constituency> load_constituencies(const std::filesystem::path& path) {
    const csv::Table t = csv::read_file(path);
    require_header(t, kConstituencyHeader, path);
    std::vector<Constituency> out;
    out.reserve(t.rows.size());
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t rowno = r + 1;
        Constituency c;
        c.constituency_id = row[0];
        if (c.constituency_id.empty()) row_error(path, rowno, "column 'constituency_id': empty key");
        check_unique_key<Constituency>(seen, c.constituency_id, path, rowno, "constituency_id");
        c.electoral_population = csv::parse_int(row[1], rowno, "electoral_population");
        c.votes = csv::parse_int(row[2], rowno, "votes");
        c.invalid_votes = csv::parse_int(row[3], rowno, "invalid_votes");
        c.area_km2 = csv::parse_double(row[4], rowno, "area_km2");
        if (c.electoral_population < 0 || c.votes < 0 || c.invalid_votes < 0) {
            row_error(path, rowno, "counts must be non-negative");
        }
        if (c.invalid_votes > c.votes) {
            row_error(path, rowno, "invalid_votes exceeds votes");
        }
        if (c.votes > c.electoral_population) {
            row_error(path, rowno, "votes exceeds electoral_population");
        }
        if (!(c.area_km2 > 0.0)) {
            row_error(path, rowno, "area_km2 must be positive");
        }
        out.push_back(std::move(c));
    }
    return out;
}

void write_bills(const std::filesystem::path& path, const std::vector<Bill>& bills) {
    csv::Table t;
    t.header = kBillHeader;
    for (const auto& b : bills) {
        std::string cosponsors;
        for (std::size_t i = 0; i < b.cosponsor_ids.size(); ++i) {
            if (i) cosponsors += ';';
            cosponsors += b.cosponsor_ids[i];
        }
        t.rows.push_back({b.bill_id, b.title, b.summary,
                          b.summary_translated.value_or(""), b.sponsor_id, cosponsors,
                          to_string(b.committee_outcome), to_string(b.ljc_outcome),
                          to_string(b.plenary_outcome)});
    }
    csv::write_file(path, t);
}

void write_legislators(const std::filesystem::path& path,
                       const std::vector<Legislator>& legislators) {
    csv::Table t;
    t.header = kLegislatorHeader;
    for (const auto& l : legislators) {
        t.rows.push_back({l.legislator_id, to_string(l.ideology), to_string(l.gender),
                          to_string(l.election_type),
                          l.on_transport_committee ? "true" : "false",
                          std::to_string(l.terms_elected),
                          l.constituency_id.value_or("")});
    }
    csv::write_file(path, t);
}

void write_constituencies(const std::filesystem::path& path,
                          const std::vector<Constituency>& constituencies) {
    csv::Table t;
    t.header = kConstituencyHeader;
    for (const auto& c : constituencies) {
        t.rows.push_back({c.constituency_id, std::to_string(c.electoral_population),
                          std::to_string(c.votes), std::to_string(c.invalid_votes),
                          csv::format_double(c.area_km2)});
    }
    csv::write_file(path, t);
}

CorpusValidationReport validate_corpus(const std::vector<Bill>& bills,
                                       const std::vector<Legislator>& legislators,
                                       const std::vector<Constituency>& constituencies) {
    CorpusValidationReport report;
    report.bill_count = bills.size();
    report.legislator_count = legislators.size();
    report.constituency_count = constituencies.size();

    auto err = [&](std::string table, std::string locator, std::string rule) {
        report.errors.push_back({std::move(table), std::move(locator), std::move(rule)});
    };
    auto warn = [&](std::string table, std::string locator, std::string rule) {
        report.warnings.push_back({std::move(table), std::move(locator), std::move(rule)});
    };

    std::unordered_map<std::string, const Legislator*> leg_by_id;
    std::unordered_map<std::string, const Constituency*> con_by_id;

    {
        std::unordered_set<std::string> keys;
        for (const auto& c : constituencies) {
            if (!keys.insert(c.constituency_id).second) {
                err("constituencies", c.constituency_id, "duplicate constituency_id");
            }
            con_by_id.emplace(c.constituency_id, &c);
            if (c.invalid_votes > c.votes) {
                err("constituencies", c.constituency_id, "invalid_votes exceeds votes");
            }
            if (c.votes > c.electoral_population) {
                err("constituencies", c.constituency_id, "votes exceeds electoral_population");
            }
            if (c.invalid_votes < 0 || c.votes < 0 || c.electoral_population < 0) {
                err("constituencies", c.constituency_id, "negative count");
            }
            if (!(c.area_km2 > 0.0)) {
                err("constituencies", c.constituency_id, "area_km2 not positive");
            }
        }
    }

    {
        std::unordered_set<std::string> keys;
        for (const auto& l : legislators) {
            if (!keys.insert(l.legislator_id).second) {
                err("legislators", l.legislator_id, "duplicate legislator_id");
            }
            leg_by_id.emplace(l.legislator_id, &l);
            if (l.terms_elected < 1) {
                err("legislators", l.legislator_id, "terms_elected below 1");
            }
            if (l.election_type == ElectionType::proportional && l.constituency_id) {
                err("legislators", l.legislator_id,
                    "proportional legislator carries a constituency_id");
            }
            if (l.election_type == ElectionType::constituency) {
                if (!l.constituency_id) {
                    err("legislators", l.legislator_id,
                        "constituency-elected legislator lacks a constituency_id");
                } else if (!con_by_id.count(*l.constituency_id)) {
                    err("legislators", l.legislator_id,
                        "unresolved constituency_id '" + *l.constituency_id + "'");
                }
            }
        }
    }

    {
        std::unordered_set<std::string> keys;
        for (const auto& b : bills) {
            if (!keys.insert(b.bill_id).second) {
                err("bills", b.bill_id, "duplicate bill_id");
            }
            if (!leg_by_id.count(b.sponsor_id)) {
                err("bills", b.bill_id, "unresolved sponsor_id '" + b.sponsor_id + "'");
            }
            std::unordered_set<std::string> co_seen;
            for (const auto& id : b.cosponsor_ids) {
                if (!leg_by_id.count(id)) {
                    err("bills", b.bill_id, "unresolved cosponsor id '" + id + "'");
                }
                if (id == b.sponsor_id) {
                    err("bills", b.bill_id, "sponsor_id listed among cosponsors");
                }
                if (!co_seen.insert(id).second) {
                    err("bills", b.bill_id, "duplicate cosponsor id '" + id + "'");
                }
            }
            if (b.approved != (b.plenary_outcome == StageOutcome::passed)) {
                err("bills", b.bill_id, "approved flag inconsistent with plenary_outcome");
            }
        }
    }

    {
        std::unordered_set<std::string> referenced;
        for (const auto& l : legislators) {
            if (l.constituency_id) referenced.insert(*l.constituency_id);
        }
        for (const auto& c : constituencies) {
            if (!referenced.count(c.constituency_id)) {
                warn("constituencies", c.constituency_id,
                     "constituency not referenced by any legislator");
            }
        }
    }

    auto canonical = [](const ValidationFinding& a, const ValidationFinding& b) {
        return std::tie(a.table, a.locator, a.rule) < std::tie(b.table, b.locator, b.rule);
    };
    std::sort(report.errors.begin(), report.errors.end(), canonical);
    std::sort(report.warnings.begin(), report.warnings.end(), canonical);
    return report;
}

std::string report_text(const CorpusValidationReport& report) {
    std::ostringstream out;
    out << "corpus validation: " << (report.admissible() ? "admissible" : "NOT admissible")
        << "\n";
    out << "counts: bills=" << report.bill_count
        << " legislators=" << report.legislator_count
        << " constituencies=" << report.constituency_count << "\n";
    for (const auto& f : report.errors) {
        out << "error " << f.table << " " << f.locator << ": " << f.rule << "\n";
    }
    for (const auto& f : report.warnings) {
        out << "warning " << f.table << " " << f.locator << ": " << f.rule << "\n";
    }
    return out.str();
}

}  // namespace legigpt::corpus
