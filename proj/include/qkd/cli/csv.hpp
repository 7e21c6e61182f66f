#pragma once

// Numeric CSV: ',' delimiter, '.' decimal point, LF line endings, header row.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qkd::cli {

struct CsvCurve {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::size_t column(std::string_view name) const;  // throws std::out_of_range
};

/// Shortest round-trip representation, independent of the C locale.
std::string format_number(double v);

std::string to_csv(const CsvCurve& curve);
CsvCurve parse_csv(std::string_view text);

void write_csv(const std::filesystem::path& path, const CsvCurve& curve);
CsvCurve read_csv(const std::filesystem::path& path);

}  // namespace qkd::cli
