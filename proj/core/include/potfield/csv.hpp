#pragma once

// Minimal CSV helpers shared by the readers/writers in this library.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace potfield::csv {

/// Splits one line on commas. Double-quoted fields may contain commas.
std::vector<std::string> split(std::string_view line);

std::string_view trim(std::string_view s);

std::optional<double> parse_double(std::string_view s);

/// Shortest representation that round-trips; empty string for NaN.
std::string format(double value);

/// Reads all lines of a file; throws Error{Io} if it cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

/// Writes text to a file, creating or truncating it; throws Error{Io}.
void write_file(const std::string& path, std::string_view contents);

}  // namespace potfield::csv
