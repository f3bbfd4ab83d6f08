#include "core/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

namespace legigpt::corpus {

namespace templates {

const std::vector<std::string>& transport_nouns() {
    static const std::vector<std::string> kNouns = {
        "road",    "traffic", "railway", "bus",      "subway",  "transit",
        "highway", "vehicle", "freight", "airport",  "harbor",  "bicycle",
        "parking", "tunnel",  "bridge",  "commuter", "metro",   "tram",
        "logistics", "mobility"};
    return kNouns;
}

const std::vector<std::string>& metaphor_phrases() {
    static const std::vector<std::string> kPhrases = {
        "road to recovery",
        "vehicle for reform",
        "bridge between generations",
        "highway to growth"};
    return kPhrases;
}

bool sentence_is_transport(const std::string& sentence) {
    std::string folded = text::fold_case(sentence);
    // Blank out metaphor phrases, then look for remaining transport tokens.
    for (const auto& phrase : metaphor_phrases()) {
        std::size_t at = 0;
        while ((at = folded.find(phrase, at)) != std::string::npos) {
            std::fill(folded.begin() + at, folded.begin() + at + phrase.size(), ' ');
            at += phrase.size();
        }
    }
    static const std::unordered_set<std::string> kNounSet(transport_nouns().begin(),
                                                          transport_nouns().end());
    for (const auto& tok : text::word_tokens(folded)) {
        if (kNounSet.count(tok)) return true;
    }
    return false;
}

bool summary_is_primarily_transport(const std::string& summary) {
    const auto sentences = text::split_sentences(summary);
    if (sentences.empty()) return false;
    std::size_t transport = 0;
    for (const auto& s : sentences) {
        if (sentence_is_transport(s)) ++transport;
    }
    return 2 * transport > sentences.size();
}

}  // namespace templates

namespace {

const std::vector<std::string>& transport_sentence_templates() {
    static const std::vector<std::string> kTemplates = {
        "This act amends the @ framework to expand @ capacity in metropolitan regions.",
        "The bill mandates periodic safety inspections for @ operators.",
        "Funding is allocated for new @ corridors connecting rural districts.",
        "Fare subsidies for @ passengers are extended to low-income households.",
        "The ministry shall publish annual statistics on @ usage and congestion.",
        "Local governments may designate priority lanes for @ services.",
        "Aging @ infrastructure shall be upgraded under a five-year plan.",
        "Operators of @ terminals must adopt barrier-free design standards."};
    return kTemplates;
}

const std::vector<std::string>& plain_sentences() {
    static const std::vector<std::string> kSentences = {
        "This act revises the corporate taxation schedule for small enterprises.",
        "The bill strengthens penalties for unfair subcontracting practices.",
        "Funding is allocated for regional education programs and teacher training.",
        "The act expands public health insurance coverage for chronic illness.",
        "Broadcast licensing requirements are clarified for regional stations.",
        "The bill establishes a commission on agricultural market stabilization.",
        "Penalties for securities fraud are increased under the revised statute.",
        "The act reforms the civil service examination schedule.",
        "Disclosure duties for supplementary pension funds are tightened.",
        "The bill introduces grants for early childhood care facilities."};
    return kSentences;
}

const std::vector<std::string>& metaphor_sentences() {
    static const std::vector<std::string> kSentences = {
        "The committee regards this reform as the road to recovery for small businesses.",
        "Lawmakers described the fund as a vehicle for reform in rural finance.",
        "Supporters call the program a bridge between generations of farmers.",
        "Proponents present the tax credit as a highway to growth for startups."};
    return kSentences;
}

const std::vector<std::string>& incidental_transport_sentences() {
    static const std::vector<std::string> kSentences = {
        "The levy also funds repairs of local bus terminals.",
        "A minor provision adjusts parking fines near public offices.",
        "One clause extends the commuter rail discount pilot.",
        "An annex item earmarks paint for school zone road markings."};
    return kSentences;
}

const std::vector<std::string>& plain_topics() {
    static const std::vector<std::string> kTopics = {
        "Taxation",   "Education",   "Public Health", "Broadcasting",
        "Agriculture", "Securities", "Civil Service", "Pensions"};
    return kTopics;
}

std::string pick(Rng& rng, const std::vector<std::string>& v) {
    return v[rng.uniform_index(v.size())];
}

std::string instantiate_transport_sentence(Rng& rng) {
    const std::string tpl = pick(rng, transport_sentence_templates());
    std::string out;
    out.reserve(tpl.size() + 16);
    for (char c : tpl) {
        if (c == '@') {
            out += pick(rng, templates::transport_nouns());
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string zero_pad(std::size_t value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

StageOutcome draw_outcome(Rng& rng, double p_pass, double p_drop) {
    const double u = rng.next_unit();
    if (u < p_pass) return StageOutcome::passed;
    if (u < p_pass + p_drop) return StageOutcome::dropped;
    return StageOutcome::pending;
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 0x20);
    return s;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticParams& params) {
    if (params.n_bills < 1) {
        throw Error(errc::invalid_argument, "n_bills must be >= 1");
    }
    if (params.n_legislators < 2) {
        throw Error(errc::invalid_argument, "n_legislators must be >= 2");
    }
    if (params.transport_fraction < 0.0 || params.transport_fraction > 1.0) {
        throw Error(errc::invalid_argument, "transport_fraction must be in [0,1]");
    }
    if (params.ideology_clustering < 0.0 || params.ideology_clustering > 1.0) {
        throw Error(errc::invalid_argument, "ideology_clustering must be in [0,1]");
    }

    Rng root(params.seed);
    SyntheticCorpus out;

    // Legislators and their constituencies. Conservative members lean
    // toward larger, less populated districts; progressive members toward
    // denser ones. The ranges overlap so the signal is informative but
    // not a lookup table.
    Rng lrng = root.child(1);
    std::vector<std::size_t> conservative_idx;
    std::vector<std::size_t> progressive_idx;
    for (std::size_t i = 0; i < params.n_legislators; ++i) {
        Legislator l;
        l.legislator_id = "L" + zero_pad(i + 1, 4);
        l.ideology = lrng.bernoulli(0.4) ? Ideology::conservative : Ideology::progressive;
        l.gender = lrng.bernoulli(0.8) ? Gender::male : Gender::female;
        l.election_type =
            lrng.bernoulli(0.85) ? ElectionType::constituency : ElectionType::proportional;
        l.on_transport_committee = lrng.bernoulli(0.35);
        const double tu = lrng.next_unit();
        l.terms_elected = tu < 0.45 ? 1 : tu < 0.75 ? 2 : tu < 0.90 ? 3 : tu < 0.97 ? 4 : 5;
        if (l.election_type == ElectionType::constituency) {
            Constituency c;
            c.constituency_id = "C" + zero_pad(out.constituencies.size() + 1, 4);
            if (l.ideology == Ideology::conservative) {
                c.electoral_population = lrng.uniform_int(95000, 165000);
                c.area_km2 = lrng.uniform_real(120.0, 1100.0);
            } else {
                c.electoral_population = lrng.uniform_int(130000, 220000);
                c.area_km2 = lrng.uniform_real(15.0, 420.0);
            }
            c.votes = static_cast<long long>(
                std::llround(static_cast<double>(c.electoral_population) *
                             lrng.uniform_real(0.55, 0.80)));
            c.invalid_votes = static_cast<long long>(
                std::llround(static_cast<double>(c.votes) * lrng.uniform_real(0.002, 0.03)));
            l.constituency_id = c.constituency_id;
            out.constituencies.push_back(std::move(c));
        }
        if (l.ideology == Ideology::conservative) {
            conservative_idx.push_back(i);
        } else {
            progressive_idx.push_back(i);
        }
        out.legislators.push_back(std::move(l));
    }
    // A single-party chamber defeats the clustering parameter; reassign one
    // member so both pools are nonempty.
    if (conservative_idx.empty()) {
        out.legislators[0].ideology = Ideology::conservative;
        conservative_idx.push_back(0);
        progressive_idx.erase(progressive_idx.begin());
    } else if (progressive_idx.empty()) {
        out.legislators[0].ideology = Ideology::progressive;
        progressive_idx.push_back(0);
        conservative_idx.erase(conservative_idx.begin());
    }

    Rng brng = root.child(2);
    for (std::size_t i = 0; i < params.n_bills; ++i) {
        Bill b;
        b.bill_id = "B" + zero_pad(i + 1, 5);

        enum class Family { transport, plain, metaphor, incidental };
        Family family;
        if (brng.bernoulli(params.transport_fraction)) {
            family = Family::transport;
        } else {
            const double u = brng.next_unit();
            family = u < 0.70 ? Family::plain : u < 0.85 ? Family::metaphor : Family::incidental;
        }

        const std::size_t n_sentences = 3 + brng.uniform_index(3);
        std::vector<std::string> sentences;
        switch (family) {
            case Family::transport: {
                for (std::size_t s = 0; s < n_sentences; ++s) {
                    sentences.push_back(instantiate_transport_sentence(brng));
                }
                b.title = "Partial Amendment to the " +
                          capitalize(pick(brng, templates::transport_nouns())) + " Act";
                out.transport_bill_ids.push_back(b.bill_id);
                break;
            }
            case Family::plain: {
                for (std::size_t s = 0; s < n_sentences; ++s) {
                    sentences.push_back(pick(brng, plain_sentences()));
                }
                b.title = "Partial Amendment to the " + pick(brng, plain_topics()) + " Act";
                break;
            }
            case Family::metaphor: {
                for (std::size_t s = 0; s + 1 < n_sentences; ++s) {
                    sentences.push_back(pick(brng, plain_sentences()));
                }
                const std::size_t at = brng.uniform_index(sentences.size() + 1);
                sentences.insert(sentences.begin() + at, pick(brng, metaphor_sentences()));
                b.title = "Partial Amendment to the " + pick(brng, plain_topics()) + " Act";
                break;
            }
            case Family::incidental: {
                for (std::size_t s = 0; s + 1 < n_sentences; ++s) {
                    sentences.push_back(pick(brng, plain_sentences()));
                }
                const std::size_t at = brng.uniform_index(sentences.size() + 1);
                sentences.insert(sentences.begin() + at,
                                 pick(brng, incidental_transport_sentences()));
                b.title = "Partial Amendment to the " + pick(brng, plain_topics()) + " Act";
                break;
            }
        }
        // Incidental clauses must stay a minority of the summary.
        for (std::size_t s = 0; s < sentences.size(); ++s) {
            if (s) b.summary.push_back(' ');
            b.summary += sentences[s];
        }

        const std::size_t sponsor = brng.uniform_index(params.n_legislators);
        b.sponsor_id = out.legislators[sponsor].legislator_id;
        const Ideology sponsor_party = out.legislators[sponsor].ideology;

        std::size_t want = 3 + brng.uniform_index(12);
        want = std::min(want, params.n_legislators - 1);
        std::unordered_set<std::size_t> chosen{sponsor};
        const auto& own_pool = sponsor_party == Ideology::conservative ? conservative_idx
                                                                       : progressive_idx;
        for (std::size_t slot = 0; slot < want; ++slot) {
            const bool from_party = brng.bernoulli(params.ideology_clustering);
            std::size_t picked = params.n_legislators;  // sentinel
            for (int attempt = 0; attempt < 64; ++attempt) {
                const std::size_t cand = from_party
                                             ? own_pool[brng.uniform_index(own_pool.size())]
                                             : brng.uniform_index(params.n_legislators);
                if (!chosen.count(cand)) {
                    picked = cand;
                    break;
                }
            }
            if (picked == params.n_legislators && from_party) {
                // deterministic scan; a full-clustering bill never leaves its party
                for (const std::size_t cand : own_pool) {
                    if (!chosen.count(cand)) {
                        picked = cand;
                        break;
                    }
                }
            } else if (picked == params.n_legislators) {
                for (std::size_t cand = 0; cand < params.n_legislators; ++cand) {
                    if (!chosen.count(cand)) {
                        picked = cand;
                        break;
                    }
                }
            }
            if (picked == params.n_legislators) break;
            chosen.insert(picked);
            b.cosponsor_ids.push_back(out.legislators[picked].legislator_id);
        }

        b.committee_outcome = draw_outcome(brng, 0.55, 0.35);
        b.ljc_outcome = b.committee_outcome == StageOutcome::passed
                            ? draw_outcome(brng, 0.60, 0.30)
                            : b.committee_outcome;
        b.plenary_outcome = b.ljc_outcome == StageOutcome::passed
                                ? draw_outcome(brng, 0.60, 0.30)
                                : b.ljc_outcome;
        b.approved = b.plenary_outcome == StageOutcome::passed;

        out.bills.push_back(std::move(b));
    }

    return out;
}

}  // namespace legigpt::corpus
