#include "mrtk/table.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace mrtk;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("delimiter detection prefers the most frequent candidate") {
    CHECK(detect_delimiter("a\tb\tc") == '\t');
    CHECK(detect_delimiter("a,b,c") == ',');
    CHECK(detect_delimiter("a;b;c") == ';');
    CHECK(detect_delimiter("a;b,c;d") == ';');
    CHECK_THROWS(detect_delimiter("single_column"));
}

TEST_CASE("read/write round trip preserves fields") {
    DelimitedTable table;
    table.delimiter = ',';
    table.header = {"x", "y"};
    table.rows = {{"1", "foo"}, {"2", ""}};
    const auto path = std::filesystem::temp_directory_path() / "mrtk_table_rt.csv";
    write_delimited(path, table);
    DelimitedTable back = read_delimited(path);
    CHECK(back.delimiter == ',');
    CHECK(back.header == table.header);
    CHECK(back.rows == table.rows);
}

TEST_CASE("read_delimited handles CRLF and skips blank lines") {
    const auto path = temp_file("mrtk_table_crlf.tsv", "a\tb\r\n1\t2\r\n\r\n3\t4\n");
    DelimitedTable table = read_delimited(path);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == std::vector<std::string>{"1", "2"});
    CHECK(table.rows[1] == std::vector<std::string>{"3", "4"});
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, -1e-300, 3.141592653589793, 1e17, -0.0, 5e-324}) {
        const auto text = format_double(v);
        auto parsed = parse_double(text);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == v);
    }
    CHECK(format_double(std::nan("")) == "NA");
}

TEST_CASE("missing tokens and strict parsing") {
    CHECK(is_missing_token(""));
    CHECK(is_missing_token("NA"));
    CHECK(is_missing_token("."));
    CHECK_FALSE(is_missing_token("0"));
    CHECK_FALSE(parse_double("1.2x").has_value());
    CHECK_FALSE(parse_integer("7.5").has_value());
    CHECK(parse_double("1e-9").value() == doctest::Approx(1e-9));
    CHECK(parse_integer("-12").value() == -12);
}
