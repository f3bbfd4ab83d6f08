#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/corpus.hpp"

namespace legigpt::corpus {

struct SyntheticParams {
    std::uint64_t seed = 7;
    std::size_t n_bills = 100;
    std::size_t n_legislators = 50;
    double transport_fraction = 0.3;
    double ideology_clustering = 0.5;
};

struct SyntheticCorpus {
    std::vector<Bill> bills;
    std::vector<Legislator> legislators;
    std::vector<Constituency> constituencies;
    /// Bill ids whose summaries were built from transportation templates,
    /// in corpus order. This is the ground truth the filter pipeline is
    /// measured against.
    std::vector<std::string> transport_bill_ids;
};

/// Deterministic labeled corpus generator for desk-scale runs. Bills come
/// in four template families: transportation policy, plain non-transport
/// policy, non-transport text that uses transport words metaphorically,
/// and non-transport bills with one genuine but incidental transport
/// clause. Only the first family is labeled as transport.
///
/// ideology_clustering = 1 draws every cosponsor from the sponsor's party;
/// 0 draws them uniformly from the whole chamber.
SyntheticCorpus generate_synthetic_corpus(const SyntheticParams& params);

/// Template vocabulary shared with the rule-based mock provider so the
/// mock can act as an exact oracle on generated corpora.
namespace templates {

const std::vector<std::string>& transport_nouns();
const std::vector<std::string>& metaphor_phrases();

/// True if the sentence uses a transport noun outside of any metaphor
/// phrase (whole-token matching, case-folded).
bool sentence_is_transport(const std::string& sentence);

/// True if more than half of the sentences are transport sentences.
bool summary_is_primarily_transport(const std::string& summary);

}  // namespace templates

}  // namespace legigpt::corpus
