#ifndef EXPBATCH_CSV_HPP
#define EXPBATCH_CSV_HPP

// Plain numeric CSV: one header row of column names, then rows of numbers.

#include <filesystem>
#include <string>
#include <vector>

#include "expbatch/error.hpp"

namespace expbatch::csv {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const;  // UnknownColumn
};

Table read_file(const std::filesystem::path& path);
Table parse(const std::string& text, const std::string& origin);

// Values with 9 significant digits, LF endings, trailing newline.
std::string format(const Table& table);
void write_file(const Table& table, const std::filesystem::path& path);

}  // namespace expbatch::csv

#endif  // EXPBATCH_CSV_HPP
