#pragma once

#include <cstdio>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace randers {

/// Shortest form that still round-trips through strtod (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_bool(bool v) { return v ? "true" : "false"; }

/// Comma-separated row builder. Fields containing a comma or quote are quoted.
class CsvRow {
 public:
  CsvRow& add(std::string_view field) {
    if (!first_) line_ += ',';
    first_ = false;
    if (field.find_first_of(",\"\n") == std::string_view::npos) {
      line_ += field;
    } else {
      line_ += '"';
      for (char c : field) {
        if (c == '"') line_ += '"';
        line_ += c;
      }
      line_ += '"';
    }
    return *this;
  }
  CsvRow& add(const char* field) { return add(std::string_view(field)); }
  CsvRow& add(const std::string& field) { return add(std::string_view(field)); }
  CsvRow& add(double v) { return add(format_double(v)); }
  CsvRow& add(bool v) { return add(format_bool(v)); }
  CsvRow& add(int v) { return add(std::to_string(v)); }
  CsvRow& add(long v) { return add(std::to_string(v)); }
  CsvRow& add(long long v) { return add(std::to_string(v)); }
  CsvRow& add(unsigned long v) { return add(std::to_string(v)); }
  CsvRow& add(unsigned long long v) { return add(std::to_string(v)); }

  const std::string& str() const { return line_; }

 private:
  std::string line_;
  bool first_ = true;
};

inline std::string csv_header(std::initializer_list<std::string_view> names) {
  CsvRow row;
  for (auto n : names) row.add(n);
  return row.str();
}

}  // namespace randers
