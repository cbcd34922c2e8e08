#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace phantom {

/// Minimal comma-separated table: a header row, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws InvalidArgument if the column is missing.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in, const std::string& source = "<csv>");
CsvTable read_csv_file(const std::filesystem::path& path);

double parse_double(std::string_view s, const std::string& context);
long parse_long(std::string_view s, const std::string& context);

/// Fixed-point text ("%.{precision}f"), with "-0.000" normalized to "0.000".
std::string format_fixed(double x, int precision);
/// Shortest text that round-trips to the same double.
std::string format_exact(double x);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace phantom
