#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace legigpt::csv {

/// A parsed delimiter-separated table: one header row plus data rows.
/// Fields are stored byte-exact; quoting is only a wire concern.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;  // throws parse error if absent
};

Table parse(std::string_view content);
Table read_file(const std::filesystem::path& path);

/// Fields containing the delimiter, quotes, or newlines are quoted with
/// doubled inner quotes. Output always ends with a newline.
std::string serialize(const Table& table);
void write_file(const std::filesystem::path& path, const Table& table);

/// Formats a double with the shortest representation that round-trips.
std::string format_double(double v);
double parse_double(std::string_view field, std::size_t row, std::string_view col);
long long parse_int(std::string_view field, std::size_t row, std::string_view col);

}  // namespace legigpt::csv
