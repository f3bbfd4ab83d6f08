#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/hash.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

using namespace legigpt;

TEST_CASE("word tokenization is whole-token and case-folded") {
    const auto tokens = text::word_tokens("The Road act; BROADCAST reform.");
    CHECK(tokens == std::vector<std::string>{"the", "road", "act", "broadcast", "reform"});

    // "broadcast" must not produce a "road" token
    const auto sub = text::word_tokens("broadcast reform");
    CHECK(std::find(sub.begin(), sub.end(), "road") == sub.end());
}

TEST_CASE("tokenization keeps non-ascii word characters together") {
    const auto tokens = text::word_tokens("도로 und Straße, 도로!");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0] == "도로");
    CHECK(tokens[1] == "und");
    CHECK(tokens[2] == "straße");
    CHECK(tokens[3] == "도로");
}

TEST_CASE("sentence splitting") {
    const auto s = text::split_sentences("One sentence. Two! Three? tail without dot");
    REQUIRE(s.size() == 4);
    CHECK(s[0] == "One sentence");
    CHECK(s[3] == "tail without dot");
}

TEST_CASE("fold_case handles ascii and latin-1") {
    CHECK(text::fold_case("ROAD") == "road");
    CHECK(text::fold_case("Straße ÀÉÎ") == "straße àéî");
}

TEST_CASE("csv round trip preserves awkward fields byte-exact") {
    csv::Table t;
    t.header = {"a", "b"};
    t.rows.push_back({"plain", "with,comma"});
    t.rows.push_back({"with \"quotes\"", "multi\nline"});
    t.rows.push_back({"", "utf8 한국어"});
    const std::string wire = csv::serialize(t);
    const csv::Table back = csv::parse(wire);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
}

TEST_CASE("csv rejects ragged rows and unterminated quotes") {
    CHECK_THROWS_AS(csv::parse("a,b\n1,2,3\n"), Error);
    CHECK_THROWS_AS(csv::parse("a,b\n\"unterminated,2\n"), Error);
}

TEST_CASE("format_double round trips") {
    for (const double v : {0.1, 1.0 / 3.0, 1e-300, 147555.25, -0.0, 3.0}) {
        const std::string s = csv::format_double(v);
        CHECK(csv::parse_double(s, 1, "x") == v);
    }
}

TEST_CASE("rng determinism and bounds") {
    Rng a(123);
    Rng b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        const auto x = r.uniform_index(13);
        CHECK(x < 13);
    }
    const auto sample = r.sample_without_replacement(20, 10);
    CHECK(sample.size() == 10);
    CHECK(std::set<std::size_t>(sample.begin(), sample.end()).size() == 10);
}

TEST_CASE("rng child streams are reproducible and distinct") {
    Rng root(99);
    Rng c1 = root.child(1);
    Rng c1_again = root.child(1);
    Rng c2 = root.child(2);
    CHECK(c1.next_u64() == c1_again.next_u64());
    CHECK(c1.next_u64() != c2.next_u64());
}

TEST_CASE("sha256 matches the known test vector") {
    CHECK(hash::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("sha256_file hashes file contents") {
    const auto path = std::filesystem::temp_directory_path() / "legigpt_hash_test.txt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "abc";
    }
    CHECK(hash::sha256_file(path) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::filesystem::remove(path);
}
