// Delimited text tables: the exchange format for every file this toolkit
// reads or writes apart from JSON reports.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mrtk {

struct DelimitedTable {
    char delimiter = '\t';
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    std::size_t require_column(std::string_view name) const;  // throws if absent
};

// Picks the delimiter among {tab, comma, semicolon} with the most hits in the
// header line; throws if none occurs.
char detect_delimiter(const std::string& header_line);

// delimiter '\0' requests auto-detection from the header row.
DelimitedTable read_delimited(const std::filesystem::path& path, char delimiter = '\0');

void write_delimited(const std::filesystem::path& path, const DelimitedTable& table);

// Shortest round-trip decimal rendering (std::to_chars); "NA" for NaN.
std::string format_double(double value);
std::string format_optional(std::optional<double> value);

bool is_missing_token(std::string_view token);

// strict double / integer parsing; nullopt on malformed input
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_integer(std::string_view token);

}  // namespace mrtk
