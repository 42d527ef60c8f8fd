#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "caudal/errors.hpp"

namespace caudal::csv {

/// Shortest lossless decimal form of a double ("%.17g" with %g zero
/// trimming), so emitted files round-trip exactly and short decimals stay
/// readable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string to_field(const std::string& s) { return s; }
inline std::string to_field(const char* s) { return s; }
inline std::string to_field(std::string_view s) { return std::string(s); }
inline std::string to_field(double v) { return format_double(v); }
inline std::string to_field(float v) { return format_double(v); }
template <typename T,
          typename = std::enable_if_t<std::is_integral_v<T>>>
inline std::string to_field(T v) {
  return std::to_string(v);
}

}  // namespace detail

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw io_error("cannot open " + path + " for writing");
  }

  void raw_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
    if (!out_) throw io_error("write failed on " + path_);
  }

  template <typename... Ts>
  void row(Ts&&... fields) {
    raw_row({detail::to_field(std::forward<Ts>(fields))...});
  }

  void close() {
    out_.close();
    if (!out_) throw io_error("close failed on " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

/// In-memory CSV with typed, line-number-reporting accessors. Fields are
/// plain comma-separated tokens; quoting is not supported.
struct Table {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw input_error(path + ":1: missing column '" + std::string(name) + "'");
  }

  const std::string& cell(std::size_t row, std::size_t col) const {
    if (row >= rows.size() || col >= rows[row].size())
      throw input_error(path + ":" + std::to_string(row + 2) +
                        ": missing field " + std::to_string(col + 1));
    return rows[row][col];
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string& s = cell(row, col);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw input_error(path + ":" + std::to_string(row + 2) +
                        ": expected a number, got '" + s + "'");
    return v;
  }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

inline Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path + " for reading");
  Table t;
  t.path = path;
  std::string line;
  if (!std::getline(in, line))
    throw input_error(path + ":1: empty file, expected a header row");
  t.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (fields.size() != t.header.size())
      throw input_error(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(t.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

}  // namespace caudal::csv
