#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgeprivsim {

/// Splits one CSV record on commas. Fields are trimmed of surrounding blanks;
/// quoting is not supported.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses the whole field as a finite double.
std::optional<double> parse_double(std::string_view text);

/// Shortest representation that round-trips to the same double.
std::string format_number(double value);

/// Writes via a sibling temp file and rename, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace edgeprivsim
