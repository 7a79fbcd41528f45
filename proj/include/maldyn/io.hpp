#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace maldyn::io {

/// Reads a whole file as bytes. Throws Error(UnreadableFile).
std::string read_file(const std::filesystem::path& path);

/// Writes bytes, creating parent directories. Throws Error(UnreadableFile) on failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);

double parse_real(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a CSV cell when it contains a comma, quote or whitespace edge.
std::string csv_cell(std::string_view cell);

/// Reads CSV rows (header included) from text, skipping blank lines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Reads the next non-empty line of a line-oriented model file, stripping '\r'.
bool next_line(std::istream& in, std::string& line);

}  // namespace maldyn::io
