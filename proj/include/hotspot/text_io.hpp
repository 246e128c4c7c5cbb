#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV/JSON readers and writers.
namespace hotspot::text {

/// Shortest decimal form that parses back to the same double.
void append_double(std::string& out, double value);
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

/// Splits one CSV line on commas. Fields are never quoted in our formats.
std::vector<std::string_view> split_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0);

}  // namespace hotspot::text
