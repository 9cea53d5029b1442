#pragma once

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>

namespace rflow {

/// Round-trip decimal form used in every output file.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << format_number(values[i]);
  }
  os << '\n';
}

inline void write_csv_row(std::ostream& os, std::initializer_list<double> values) {
  write_csv_row(os, std::span<const double>(values.begin(), values.size()));
}

} // namespace rflow
