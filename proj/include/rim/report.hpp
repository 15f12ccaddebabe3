#pragma once

// CSV output with RFC 4180 quoting. Doubles are written with %.17g so a
// value read back is bit-identical.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace rim {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Quotes a field when it holds a comma, quote, CR or LF; inner quotes are doubled.
inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    if (header.empty()) throw std::invalid_argument("CsvWriter: empty header");
    write_line(header);
  }

  /// Fields are converted with `field`; the count must match the header.
  template <class... T>
  void row(const T&... values) {
    static_assert(sizeof...(T) > 0);
    std::vector<std::string> fields{field(values)...};
    if (fields.size() != columns_) throw std::invalid_argument("CsvWriter: row has wrong number of fields");
    write_line(fields);
  }

  static std::string field(const std::string& s) { return s; }
  static std::string field(const char* s) { return s; }
  static std::string field(std::string_view s) { return std::string(s); }
  static std::string field(bool b) { return b ? "1" : "0"; }
  template <class T>
    requires std::is_arithmetic_v<T>
  static std::string field(T v) {
    if constexpr (std::is_floating_point_v<T>)
      return format_double(static_cast<double>(v));
    else
      return std::to_string(v);
  }

 private:
  void write_line(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(fields[i]);
    }
    out_ << "\r\n";
    if (!out_) throw std::runtime_error("CsvWriter: write failed");
  }

  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace rim
