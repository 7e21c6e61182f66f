#include "qkd/cli/csv.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace qkd::cli {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) return out;
    line.remove_prefix(comma + 1);
  }
}

double parse_number(std::string_view cell) {
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw std::runtime_error("csv: not a number: '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

void CsvCurve::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::logic_error("csv: row width differs from header");
  rows.push_back(std::move(row));
}

std::size_t CsvCurve::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("csv: no column '" + std::string(name) + "'");
}

std::string format_number(double v) { return fmt::format("{}", v); }

std::string to_csv(const CsvCurve& curve) {
  if (curve.columns.empty()) throw std::logic_error("csv: header is empty");
  std::string out = fmt::format("{}\n", fmt::join(curve.columns, ","));
  for (const auto& row : curve.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

CsvCurve parse_csv(std::string_view text) {
  CsvCurve curve;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) throw std::runtime_error("csv: last line lacks LF terminator");
    const auto line = text.substr(0, nl);
    text.remove_prefix(nl + 1);
    if (line.find('\r') != std::string_view::npos) throw std::runtime_error("csv: CR in line");
    const auto cells = split(line);
    if (header) {
      for (auto c : cells) {
        if (c.empty()) throw std::runtime_error("csv: empty column name");
        curve.columns.emplace_back(c);
      }
      header = false;
      continue;
    }
    if (cells.size() != curve.columns.size()) throw std::runtime_error("csv: row width differs from header");
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(parse_number(c));
    curve.rows.push_back(std::move(row));
  }
  if (header) throw std::runtime_error("csv: missing header row");
  return curve;
}

void write_csv(const std::filesystem::path& path, const CsvCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << to_csv(curve);
  if (!out) throw std::runtime_error("error writing '" + path.string() + "'");
}

CsvCurve read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace qkd::cli
