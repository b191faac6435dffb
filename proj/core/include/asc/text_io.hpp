// Small helpers for the delimited-text formats used by the file interfaces.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace asc::io {

/// Splits one CSV line on commas, trimming surrounding whitespace per field.
/// Quoting is not supported; identifiers in these formats never contain commas.
std::vector<std::string> split_csv(std::string_view line);

std::string trim(std::string_view text);

/// Reads all lines, stripping trailing '\r'. Throws ValidationError if the
/// file cannot be opened.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes text atomically enough for our purposes (truncate + write).
/// Throws ValidationError when the file cannot be created.
void write_text(const std::filesystem::path& path, std::string_view text);

/// Parses a finite double; throws ValidationError mentioning `what` otherwise.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Shortest round-trip representation of a double.
std::string format_double(double value);

}  // namespace asc::io
