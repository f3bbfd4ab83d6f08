#include "core/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace legigpt::csv {

namespace {

constexpr char kDelim = ',';

bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out.append(field);
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw Error(errc::parse, "missing column '" + std::string(name) + "'");
}

Table parse(std::string_view content) {
    Table table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (table.header.empty()) {
            table.header = std::move(row);
        } else {
            table.rows.push_back(std::move(row));
        }
        row.clear();
        row_started = false;
    };

    std::size_t i = 0;
    const std::size_t n = content.size();
    while (i < n) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && content[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field.push_back(c);
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                ++i;
                break;
            case kDelim:
                end_field();
                row_started = true;
                ++i;
                break;
            case '\r':
                ++i;
                break;
            case '\n':
                end_row();
                ++i;
                break;
            default:
                field.push_back(c);
                row_started = true;
                ++i;
                break;
        }
    }
    if (in_quotes) throw Error(errc::parse, "unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) end_row();

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.header.size()) {
            throw Error(errc::parse, "row " + std::to_string(r + 1) + " has " +
                                         std::to_string(table.rows[r].size()) +
                                         " fields, expected " +
                                         std::to_string(table.header.size()));
        }
    }
    return table;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string serialize(const Table& table) {
    std::string out;
    auto write_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(kDelim);
            append_field(out, row[i]);
        }
        out.push_back('\n');
    };
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
    return out;
}

void write_file(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(errc::io, "cannot write '" + path.string() + "'");
    out << serialize(table);
    if (!out) throw Error(errc::io, "write failed for '" + path.string() + "'");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view field, std::size_t row, std::string_view col) {
    double v{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw Error(errc::parse, "row " + std::to_string(row) + ", column '" +
                                     std::string(col) + "': not a number: '" +
                                     std::string(field) + "'");
    }
    return v;
}

long long parse_int(std::string_view field, std::size_t row, std::string_view col) {
    long long v{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw Error(errc::parse, "row " + std::to_string(row) + ", column '" +
                                     std::string(col) + "': not an integer: '" +
                                     std::string(field) + "'");
    }
    return v;
}

}  // namespace legigpt::csv
