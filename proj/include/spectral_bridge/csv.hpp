// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spectral_bridge::csv {

/// Splits one CSV line on commas. Quoting is not supported; none of our schemas need it.
std::vector<std::string> split_line(std::string_view line);

std::string_view trim(std::string_view s);

/// Strict numeric parse of the whole field; nullopt on garbage or trailing characters.
std::optional<double> parse_double(std::string_view field);
std::optional<std::int64_t> parse_int(std::string_view field);

/// Reads all non-empty lines (CR stripped) with 1-based line numbers.
struct Line {
    std::size_t number = 0;
    std::string text;
};
std::vector<Line> read_lines(std::istream& in);
std::vector<Line> read_lines(const std::filesystem::path& path);

/// Checks that the first line equals the expected header (after trimming each field).
void expect_header(const Line& line, const std::vector<std::string>& expected,
                   const std::string& what);

/// Shortest round-trippable text form of a double.
std::string format_double(double v);

} // namespace spectral_bridge::csv
