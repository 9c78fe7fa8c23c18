// SPDX-License-Identifier: Apache-2.0
#include "spectral_bridge/csv.hpp"

#include "spectral_bridge/error.hpp"

#include <charconv>
#include <fmt/format.h>
#include <fstream>

namespace spectral_bridge::csv {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(trim(line.substr(start)));
            break;
        }
        fields.emplace_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    if (field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
    return v;
}

std::vector<Line> read_lines(std::istream& in) {
    std::vector<Line> lines;
    std::string text;
    std::size_t number = 0;
    while (std::getline(in, text)) {
        ++number;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (trim(text).empty()) continue;
        lines.push_back({number, text});
    }
    return lines;
}

std::vector<Line> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeFailure(fmt::format("cannot open '{}'", path.string()));
    return read_lines(in);
}

void expect_header(const Line& line, const std::vector<std::string>& expected,
                   const std::string& what) {
    auto fields = split_line(line.text);
    if (fields != expected) {
        throw ValidationError(fmt::format("{}: unexpected header '{}' (expected '{}')", what,
                                          line.text, fmt::join(expected, ",")));
    }
}

std::string format_double(double v) {
    return fmt::format("{}", v);
}

} // namespace spectral_bridge::csv
