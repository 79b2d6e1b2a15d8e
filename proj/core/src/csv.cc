#include "sharecause/csv.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <boost/tokenizer.hpp>

#include "sharecause/common.h"

namespace sharecause {
namespace {

std::vector<std::string> split_line(const std::string& line,
                                    const std::string& source,
                                    std::size_t line_no) {
  using Separator = boost::escaped_list_separator<char>;
  try {
    boost::tokenizer<Separator> tok(line, Separator('\\', ',', '"'));
    return {tok.begin(), tok.end()};
  } catch (const boost::escaped_list_error& e) {
    throw ValidationError(source + ":" + std::to_string(line_no) +
                          ": malformed CSV (" + e.what() + ")");
  }
}

std::string location(const CsvTable& t, std::size_t row, std::size_t col) {
  return t.source + ":" + std::to_string(t.line_numbers.at(row)) + " column '" +
         t.header.at(col) + "'";
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw ValidationError(source + ": missing column '" + name + "'");
}

void CsvTable::require_columns(const std::vector<std::string>& names) const {
  for (const auto& n : names) column(n);
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, source, line_no);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(t.header.size()) +
                            " fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ValidationError(source + ": empty file");
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_csv(in, path.string());
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out << ',';
    const std::string& c = cells[k];
    if (c.find_first_of(",\"\n\\") == std::string::npos) {
      out << c;
      continue;
    }
    out << '"';
    for (char ch : c) {
      if (ch == '\n') {
        out << "\\n";
        continue;
      }
      if (ch == '"' || ch == '\\') out << '\\';
      out << ch;
    }
    out << '"';
  }
  out << '\n';
}

double parse_double_cell(const CsvTable& table, std::size_t row,
                         std::size_t col) {
  const std::string& cell = table.rows.at(row).at(col);
  double v = 0.0;
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() ||
      !std::isfinite(v)) {
    throw ValidationError(location(table, row, col) + ": non-numeric value '" +
                          cell + "'");
  }
  return v;
}

long long parse_int_cell(const CsvTable& table, std::size_t row,
                         std::size_t col) {
  const std::string& cell = table.rows.at(row).at(col);
  long long v = 0;
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size()) {
    throw ValidationError(location(table, row, col) + ": non-integer value '" +
                          cell + "'");
  }
  return v;
}

}  // namespace sharecause
