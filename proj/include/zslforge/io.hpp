#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace zslforge {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Locale-independent parse of a full token; throws DataFormatError-style
/// context is left to callers (returns false on failure).
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, long long& out);

std::vector<std::string_view> split_csv_row(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     std::string_view content);

std::uint64_t fnv1a64_bytes(std::string_view s);
std::string hash_hex(std::string_view s);

}  // namespace zslforge
