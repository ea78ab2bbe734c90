#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace affkit {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on `sep`, keeping empty fields.
std::vector<std::string_view> split(std::string_view s, char sep);

// Splits into lines, tolerating CRLF and dropping trailing blank lines.
std::vector<std::string_view> split_lines(std::string_view text);

// Strict full-field numeric parses; surrounding whitespace is tolerated.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

// Shortest decimal representation that round-trips the double.
std::string format_double(double value);

// Fixed-point with `decimals` fractional digits, for report tables.
std::string format_fixed(double value, int decimals);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace affkit
