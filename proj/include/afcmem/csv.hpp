#pragma once

#include <string>
#include <vector>

namespace afcmem::csv {

// Deterministic, locale-free CSV. Numbers are written with shortest
// round-trip formatting so identical data always serializes to identical
// bytes.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string format_double(double value);

void write(const std::string& path, const Table& table);
Table read(const std::string& path);

}  // namespace afcmem::csv
