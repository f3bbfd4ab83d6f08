#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace legigpt::filter {

/// The five prompt templates driving the pipeline. Placeholders use
/// {{name}} syntax; every prompt starts with a "TASK: <tag>" line so
/// rule-based providers can dispatch without guessing.
struct PromptSet {
    std::string translation;
    std::string keyword_extraction;
    std::string keyword_selection;
    std::string sentence_selection;
    std::string context_selection;

    /// Built-in defaults.
    static PromptSet defaults();

    /// Loads any of the five template files present in `dir`
    /// (translation.txt, keyword_extraction.txt, keyword_selection.txt,
    /// sentence_selection.txt, context_selection.txt); missing files keep
    /// their defaults.
    static PromptSet load(const std::filesystem::path& dir);

    /// Writes all five templates into `dir`.
    void write(const std::filesystem::path& dir) const;
};

std::string apply_template(const std::string& tmpl,
                           const std::map<std::string, std::string>& values);

/// First line "TASK: <tag>" of a prompt, or empty.
std::string prompt_task(const std::string& prompt);

/// Section payload introduced by a "NAME:" line, up to the next section
/// header or end of prompt.
std::string prompt_section(const std::string& prompt, const std::string& section);

}  // namespace legigpt::filter
