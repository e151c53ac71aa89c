#pragma once

// Shared text-layer helpers: the parse error type every spec parser throws,
// the 12-significant-digit float convention used by tables and JSON, and
// RFC-4180 CSV field quoting.

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace phi {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Formats with 12 significant digits; round-trips through strtod to the
// value round12 returns, so emitted text re-parses to the emitted value.
inline std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// The double nearest the 12-digit decimal rendering of v.  Values passed
// through round12 survive a format/parse cycle bit-identically.
inline double round12(double v) {
  return std::strtod(format_g12(v).c_str(), nullptr);
}

inline std::string csv_escape(const std::string& field) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace phi
