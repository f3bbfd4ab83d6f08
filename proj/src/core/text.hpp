#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace legigpt::text {

/// Decodes one UTF-8 code point starting at `pos`, advancing `pos` past it.
/// Malformed bytes decode as U+FFFD, one byte at a time.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

/// Lowercases ASCII and Latin-1 letters; other code points pass through.
std::string fold_case(std::string_view s);

/// Splits into word tokens on Unicode word boundaries (letters/digits form
/// words, punctuation and whitespace separate them) and case-folds each
/// token. No stemming.
std::vector<std::string> word_tokens(std::string_view s);

/// Splits prose into sentences on '.', '!', '?' (and their fullwidth forms).
/// Trailing fragments without a terminator count as a sentence.
std::vector<std::string> split_sentences(std::string_view s);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// First whitespace-delimited token, case-folded. Empty string if none.
std::string first_token_folded(std::string_view s);

}  // namespace legigpt::text
