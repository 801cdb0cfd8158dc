#include "mrtk/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mrtk {

std::optional<std::size_t> DelimitedTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

std::size_t DelimitedTable::require_column(std::string_view name) const {
    auto idx = column(name);
    if (!idx) throw std::runtime_error("missing mapped column: " + std::string(name));
    return *idx;
}

char detect_delimiter(const std::string& header_line) {
    const char candidates[] = {'\t', ',', ';'};
    char best = 0;
    std::size_t best_count = 0;
    for (char c : candidates) {
        std::size_t count = static_cast<std::size_t>(
            std::count(header_line.begin(), header_line.end(), c));
        if (count > best_count) {
            best_count = count;
            best = c;
        }
    }
    if (best == 0)
        throw std::runtime_error("cannot detect delimiter (no tab/comma/semicolon in header)");
    return best;
}

static std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

DelimitedTable read_delimited(const std::filesystem::path& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    DelimitedTable table;
    table.delimiter = delimiter == '\0' ? detect_delimiter(line) : delimiter;
    table.header = split_line(line, table.delimiter);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        table.rows.push_back(split_line(line, table.delimiter));
    }
    return table;
}

void write_delimited(const std::filesystem::path& path, const DelimitedTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out << table.delimiter;
        out << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << table.delimiter;
            out << row[i];
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_optional(std::optional<double> value) {
    return value ? format_double(*value) : std::string("NA");
}

bool is_missing_token(std::string_view token) {
    return token.empty() || token == "NA" || token == "na" || token == "." ||
           token == "NaN" || token == "nan";
}

std::optional<double> parse_double(std::string_view token) {
    if (token.empty()) return std::nullopt;
    double value = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<long long> parse_integer(std::string_view token) {
    if (token.empty()) return std::nullopt;
    long long value = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

}  // namespace mrtk
