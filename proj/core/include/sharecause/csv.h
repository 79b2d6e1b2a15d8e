#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sharecause {

// Comma-delimited, one header row, optional double-quoted cells.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row

  // Index of a header column, or a ValidationError naming it.
  std::size_t column(const std::string& name) const;
  void require_columns(const std::vector<std::string>& names) const;
};

CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

// Strict numeric parsing; errors carry source, line and column.
double parse_double_cell(const CsvTable& table, std::size_t row,
                         std::size_t col);
long long parse_int_cell(const CsvTable& table, std::size_t row,
                         std::size_t col);

}  // namespace sharecause
