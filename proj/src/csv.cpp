#include "afcmem/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "afcmem/errors.hpp"

namespace afcmem::csv {

std::string format_double(double value) {
  if (std::isfinite(value) && value == std::floor(value) &&
      std::abs(value) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
    return buf;
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw IoError("csv: number formatting failed");
  return std::string(buf, ptr);
}

void write(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("csv: cannot open for writing: " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("csv: write failed: " + path);
}

Table read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("csv: cannot open for reading: " + path);
  Table table;
  std::string line;
  bool first = true;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (first) {
      while (std::getline(ss, cell, ',')) table.header.push_back(cell);
      first = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("csv: " + path + ":" + std::to_string(line_number) +
                         ": not a number: '" + cell + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace afcmem::csv
