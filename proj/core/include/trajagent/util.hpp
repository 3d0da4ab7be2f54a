#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajagent {

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// As format_double but always carries a '.', 'e', "inf" or "nan" so the
// text reads back as a floating-point literal.
std::string format_float_literal(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Fixed-point rendering with `digits` decimals, for human-readable reports.
std::string format_fixed(double v, int digits);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace trajagent
