#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace albench::io {

// Locale-independent float formatting with 6 significant digits (all floats
// in emitted files go through this).
std::string format_g6(double value);

// RFC-4180 quoting: fields containing comma, quote, CR or LF get quoted with
// internal quotes doubled.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

// RFC-4180 reader (handles quoted fields and doubled quotes).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);
std::vector<std::vector<std::string>> parse_csv_text(std::string_view text,
                                                     const std::string& origin);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// JSON string escaping for the hand-rolled flat JSON lines.
std::string json_escape(std::string_view s);

}  // namespace albench::io
