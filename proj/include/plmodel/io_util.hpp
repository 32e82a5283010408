#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plmodel {

// Throws IoError when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// 17 significant digits; parses back to the identical double.
std::string format_double(double v);
void append_double(std::string& out, double v);
std::string format_optional(const std::optional<double>& v);

// Strict decimal parse of the whole field; nullopt on failure.
std::optional<double> parse_double(std::string_view text);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Minimal comma-separated table: a header row plus string cells. Fields
/// never contain commas or quotes in the formats this toolkit writes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv(const CsvTable& table);

std::vector<std::string> split(std::string_view text, char sep);

}  // namespace plmodel
