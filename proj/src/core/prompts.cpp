#include "core/prompts.hpp"

#include <fstream>
#include <sstream>

#include "core/errors.hpp"
#include "core/text.hpp"

namespace legigpt::filter {

namespace {

constexpr const char* kTranslation =
    "TASK: translation\n"
    "Translate the following legislative bill summary into English. Respond with the "
    "translation only.\n"
    "\n"
    "SUMMARY:\n"
    "{{summary}}\n";

constexpr const char* kKeywordExtraction =
    "TASK: keyword-extraction\n"
    "Count all transportation-related nouns appearing in the bill summaries below. "
    "Respond with one line per noun in the form \"noun: count\" and nothing else.\n"
    "\n"
    "DOCUMENTS:\n"
    "{{documents}}\n";

constexpr const char* kKeywordSelection =
    "TASK: keyword-verdict\n"
    "Identify all legislative bills containing at least one transportation-related "
    "keyword. For the single bill below, answer with one leading token RELEVANT or "
    "IRRELEVANT followed by a one-sentence rationale.\n"
    "\n"
    "KEYWORDS:\n"
    "{{keywords}}\n"
    "\n"
    "SUMMARY:\n"
    "{{summary}}\n";

constexpr const char* kSentenceSelection =
    "TASK: sentence-verdict\n"
    "Among the previously selected bills, determine which exhibit meaningful "
    "transportation-related context in their summaries. For the single bill below, "
    "answer with one leading token RELEVANT or IRRELEVANT followed by a one-sentence "
    "rationale.\n"
    "\n"
    "SUMMARY:\n"
    "{{summary}}\n";

constexpr const char* kContextSelection =
    "TASK: context-verdict\n"
    "Select only those bills in which transportation constitutes the primary subject "
    "or intended legislative outcome. For the single bill below, answer with one "
    "leading token RELEVANT or IRRELEVANT followed by a one-sentence rationale.\n"
    "\n"
    "SUMMARY:\n"
    "{{summary}}\n";

std::string read_if_present(const std::filesystem::path& file, const char* fallback) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return fallback;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_one(const std::filesystem::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io, "cannot write '" + file.string() + "'");
    out << content;
}

bool is_section_header(const std::string& line) {
    if (line.size() < 2 || line.back() != ':') return false;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const char c = line[i];
        if (!((c >= 'A' && c <= 'Z') || c == '_')) return false;
    }
    return true;
}

}  // namespace

PromptSet PromptSet::defaults() {
    return PromptSet{kTranslation, kKeywordExtraction, kKeywordSelection,
                     kSentenceSelection, kContextSelection};
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
    PromptSet set;
    set.translation = read_if_present(dir / "translation.txt", kTranslation);
    set.keyword_extraction =
        read_if_present(dir / "keyword_extraction.txt", kKeywordExtraction);
    set.keyword_selection =
        read_if_present(dir / "keyword_selection.txt", kKeywordSelection);
    set.sentence_selection =
        read_if_present(dir / "sentence_selection.txt", kSentenceSelection);
    set.context_selection =
        read_if_present(dir / "context_selection.txt", kContextSelection);
    return set;
}

void PromptSet::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_one(dir / "translation.txt", translation);
    write_one(dir / "keyword_extraction.txt", keyword_extraction);
    write_one(dir / "keyword_selection.txt", keyword_selection);
    write_one(dir / "sentence_selection.txt", sentence_selection);
    write_one(dir / "context_selection.txt", context_selection);
}

std::string apply_template(const std::string& tmpl,
                           const std::map<std::string, std::string>& values) {
    std::string out = tmpl;
    for (const auto& [key, value] : values) {
        const std::string token = "{{" + key + "}}";
        std::size_t at = 0;
        while ((at = out.find(token, at)) != std::string::npos) {
            out.replace(at, token.size(), value);
            at += value.size();
        }
    }
    return out;
}

std::string prompt_task(const std::string& prompt) {
    const std::size_t eol = prompt.find('\n');
    const std::string first = prompt.substr(0, eol);
    if (!first.starts_with("TASK:")) return "";
    return text::trim(first.substr(5));
}

std::string prompt_section(const std::string& prompt, const std::string& section) {
    std::istringstream in(prompt);
    std::string line;
    const std::string header = section + ":";
    bool capturing = false;
    std::string out;
    while (std::getline(in, line)) {
        if (capturing) {
            if (is_section_header(line)) break;
            if (!out.empty()) out.push_back('\n');
            out += line;
        } else if (line == header) {
            capturing = true;
        }
    }
    // drop trailing blank lines left by template formatting
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    return out;
}

}  // namespace legigpt::filter
