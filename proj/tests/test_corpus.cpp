#include <doctest.h>
#include <map>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "core/corpus.hpp"
#include "core/errors.hpp"
#include "core/synthetic.hpp"

using namespace legigpt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("legigpt_corpus_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
};

constexpr const char* kBillHeader =
    "bill_id,title,summary,summary_translated,sponsor_id,cosponsor_ids,"
    "committee_outcome,ljc_outcome,plenary_outcome\n";
constexpr const char* kLegHeader =
    "legislator_id,ideology,gender,election_type,on_transport_committee,"
    "terms_elected,constituency_id\n";
constexpr const char* kConHeader =
    "constituency_id,electoral_population,votes,invalid_votes,area_km2\n";

}  // namespace

TEST_CASE("load_bills: empty file yields empty list") {
    TempDir dir;
    const auto bills = corpus::load_bills(dir.file("bills.csv", kBillHeader));
    CHECK(bills.empty());
}

TEST_CASE("load_bills: fixture row parses field by field") {
    TempDir dir;
    const auto bills = corpus::load_bills(dir.file(
        "bills.csv", std::string(kBillHeader) +
                         "B1,An Act,Some summary,,L1,L2;L3,passed,passed,passed\n"));
    REQUIRE(bills.size() == 1);
    const corpus::Bill& b = bills[0];
    CHECK(b.bill_id == "B1");
    CHECK(b.title == "An Act");
    CHECK(b.summary == "Some summary");
    CHECK_FALSE(b.summary_translated.has_value());
    CHECK(b.sponsor_id == "L1");
    CHECK(b.cosponsor_ids == std::vector<std::string>{"L2", "L3"});
    CHECK(b.plenary_outcome == corpus::StageOutcome::passed);
    CHECK(b.approved);
}

TEST_CASE("load_bills: duplicate bill_id is an error naming the key") {
    TempDir dir;
    const auto path = dir.file("bills.csv", std::string(kBillHeader) +
                                                "B1,t,s,,L1,,pending,pending,pending\n"
                                                "B1,t,s,,L1,,pending,pending,pending\n");
    CHECK_THROWS_WITH_AS(corpus::load_bills(path),
                         doctest::Contains("B1"), Error);
}

TEST_CASE("load_bills: missing file and malformed rows") {
    TempDir dir;
    CHECK_THROWS_AS(corpus::load_bills(dir.path / "nope.csv"), Error);
    const auto bad_outcome = dir.file(
        "bad.csv", std::string(kBillHeader) + "B1,t,s,,L1,,oops,pending,pending\n");
    CHECK_THROWS_WITH_AS(corpus::load_bills(bad_outcome), doctest::Contains("row 1"),
                         Error);
}

TEST_CASE("load_legislators: proportional member with constituency is a schema error") {
    TempDir dir;
    const auto path = dir.file("l.csv", std::string(kLegHeader) +
                                            "L1,conservative,male,proportional,false,2,C9\n");
    CHECK_THROWS_AS(corpus::load_legislators(path), Error);

    const auto missing = dir.file(
        "l2.csv", std::string(kLegHeader) + "L1,conservative,male,constituency,false,2,\n");
    CHECK_THROWS_AS(corpus::load_legislators(missing), Error);

    const auto zero_terms = dir.file(
        "l3.csv", std::string(kLegHeader) + "L1,progressive,female,proportional,false,0,\n");
    CHECK_THROWS_AS(corpus::load_legislators(zero_terms), Error);
}

TEST_CASE("load_constituencies: range violations are load errors") {
    TempDir dir;
    const auto invalid_gt_votes =
        dir.file("c.csv", std::string(kConHeader) + "C1,1000,500,600,10.5\n");
    CHECK_THROWS_AS(corpus::load_constituencies(invalid_gt_votes), Error);
    const auto votes_gt_pop =
        dir.file("c2.csv", std::string(kConHeader) + "C1,1000,1500,5,10.5\n");
    CHECK_THROWS_AS(corpus::load_constituencies(votes_gt_pop), Error);
    const auto ok = dir.file("c3.csv", std::string(kConHeader) + "C1,1000,700,5,10.5\n");
    const auto cons = corpus::load_constituencies(ok);
    REQUIRE(cons.size() == 1);
    CHECK(cons[0].area_km2 == 10.5);
}

namespace {

corpus::Legislator make_leg(const std::string& id, corpus::Ideology ideology,
                            std::optional<std::string> constituency) {
    corpus::Legislator l;
    l.legislator_id = id;
    l.ideology = ideology;
    l.election_type = constituency ? corpus::ElectionType::constituency
                                   : corpus::ElectionType::proportional;
    l.constituency_id = std::move(constituency);
    return l;
}

corpus::Bill make_bill(const std::string& id, const std::string& sponsor,
                       std::vector<std::string> cosponsors) {
    corpus::Bill b;
    b.bill_id = id;
    b.title = "t";
    b.summary = "s";
    b.sponsor_id = sponsor;
    b.cosponsor_ids = std::move(cosponsors);
    return b;
}

corpus::Constituency make_con(const std::string& id) {
    corpus::Constituency c;
    c.constituency_id = id;
    c.electoral_population = 1000;
    c.votes = 600;
    c.invalid_votes = 6;
    c.area_km2 = 25.0;
    return c;
}

}  // namespace

TEST_CASE("validate_corpus: self-consistent fixture is admissible") {
    std::vector<corpus::Bill> bills = {make_bill("B1", "L1", {"L2"}),
                                       make_bill("B2", "L2", {"L1", "L3"}),
                                       make_bill("B3", "L3", {})};
    std::vector<corpus::Legislator> legislators = {
        make_leg("L1", corpus::Ideology::conservative, "C1"),
        make_leg("L2", corpus::Ideology::progressive, "C2"),
        make_leg("L3", corpus::Ideology::progressive, std::nullopt)};
    std::vector<corpus::Constituency> constituencies = {make_con("C1"), make_con("C2")};

    const auto report = corpus::validate_corpus(bills, legislators, constituencies);
    CHECK(report.admissible());
    CHECK(report.bill_count == 3);

    SUBCASE("unknown legislator reference produces one error") {
        bills.push_back(make_bill("B4", "LX", {}));
        const auto bad = corpus::validate_corpus(bills, legislators, constituencies);
        REQUIRE(bad.errors.size() == 1);
        CHECK(bad.errors[0].table == "bills");
        CHECK(bad.errors[0].locator == "B4");
        CHECK(bad.errors[0].rule.find("LX") != std::string::npos);
    }

    SUBCASE("findings are order-insensitive and idempotent") {
        bills.push_back(make_bill("B4", "LX", {}));
        bills.push_back(make_bill("B0", "L1", {"L1"}));  // sponsor among cosponsors
        auto r1 = corpus::validate_corpus(bills, legislators, constituencies);
        std::reverse(bills.begin(), bills.end());
        std::reverse(legislators.begin(), legislators.end());
        auto r2 = corpus::validate_corpus(bills, legislators, constituencies);
        REQUIRE(r1.errors.size() == r2.errors.size());
        for (std::size_t i = 0; i < r1.errors.size(); ++i) {
            CHECK(r1.errors[i].table == r2.errors[i].table);
            CHECK(r1.errors[i].locator == r2.errors[i].locator);
            CHECK(r1.errors[i].rule == r2.errors[i].rule);
        }
    }
}

TEST_CASE("validate_corpus: empty corpus is clean with zero counts") {
    const auto report = corpus::validate_corpus({}, {}, {});
    CHECK(report.admissible());
    CHECK(report.bill_count == 0);
    CHECK(report.legislator_count == 0);
    CHECK(report.constituency_count == 0);
}

TEST_CASE("bill write/load round trip is field-exact") {
    TempDir dir;
    corpus::Bill b = make_bill("B1", "L1", {"L2", "L3"});
    b.title = "Title, with commas \"and quotes\"";
    b.summary = "Line one.\nLine two with 한국어.";
    b.summary_translated = "EN: translation";
    b.committee_outcome = corpus::StageOutcome::passed;
    b.ljc_outcome = corpus::StageOutcome::dropped;
    b.plenary_outcome = corpus::StageOutcome::pending;

    corpus::write_bills(dir.path / "bills.csv", {b});
    const auto back = corpus::load_bills(dir.path / "bills.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].bill_id == b.bill_id);
    CHECK(back[0].title == b.title);
    CHECK(back[0].summary == b.summary);
    CHECK(back[0].summary_translated == b.summary_translated);
    CHECK(back[0].cosponsor_ids == b.cosponsor_ids);
    CHECK(back[0].committee_outcome == b.committee_outcome);
    CHECK(back[0].ljc_outcome == b.ljc_outcome);
    CHECK(back[0].plenary_outcome == b.plenary_outcome);
    CHECK(back[0].approved == b.approved);
}

TEST_CASE("synthetic corpus: determinism and parameter bounds") {
    corpus::SyntheticParams params;
    params.seed = 7;
    params.n_bills = 50;
    params.n_legislators = 20;

    const auto a = corpus::generate_synthetic_corpus(params);
    const auto b = corpus::generate_synthetic_corpus(params);
    REQUIRE(a.bills.size() == b.bills.size());
    for (std::size_t i = 0; i < a.bills.size(); ++i) {
        CHECK(a.bills[i].bill_id == b.bills[i].bill_id);
        CHECK(a.bills[i].summary == b.bills[i].summary);
        CHECK(a.bills[i].sponsor_id == b.bills[i].sponsor_id);
        CHECK(a.bills[i].cosponsor_ids == b.bills[i].cosponsor_ids);
    }
    CHECK(a.transport_bill_ids == b.transport_bill_ids);

    corpus::SyntheticParams bad = params;
    bad.transport_fraction = 1.5;
    CHECK_THROWS_AS(corpus::generate_synthetic_corpus(bad), Error);
    bad = params;
    bad.n_legislators = 1;
    CHECK_THROWS_AS(corpus::generate_synthetic_corpus(bad), Error);
}

TEST_CASE("synthetic corpus: transport fraction boundaries") {
    corpus::SyntheticParams params;
    params.seed = 7;
    params.n_bills = 100;
    params.n_legislators = 30;
    params.transport_fraction = 0.0;
    CHECK(corpus::generate_synthetic_corpus(params).transport_bill_ids.empty());

    params.transport_fraction = 0.3;
    params.n_bills = 1000;
    const auto labeled = corpus::generate_synthetic_corpus(params);
    const auto count = labeled.transport_bill_ids.size();
    CHECK(count >= 250);
    CHECK(count <= 350);
    // golden count for this exact seed/parameter set
    CHECK(count == 311);
}

TEST_CASE("synthetic corpus: validates cleanly and respects clustering boundary") {
    corpus::SyntheticParams params;
    params.seed = 11;
    params.n_bills = 60;
    params.n_legislators = 40;
    params.ideology_clustering = 1.0;
    const auto c = corpus::generate_synthetic_corpus(params);

    const auto report = corpus::validate_corpus(c.bills, c.legislators, c.constituencies);
    CHECK(report.admissible());

    std::map<std::string, corpus::Ideology> party;
    for (const auto& l : c.legislators) party[l.legislator_id] = l.ideology;
    for (const auto& b : c.bills) {
        for (const auto& id : b.cosponsor_ids) {
            CHECK(party.at(id) == party.at(b.sponsor_id));
        }
    }
}
