#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "edgeroute/error.hpp"

namespace edgeroute::csv {

/// Header-keyed table. Cells stay strings; callers convert what they need.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
  int require_column(const std::string& name) const {
    const int c = column(name);
    if (c < 0) fail(ErrorKind::Format, "missing CSV column '" + name + "'");
    return c;
  }
};

/// RFC 4180 field splitting: quoted fields, doubled quotes inside quotes.
inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  if (quoted) fail(ErrorKind::Format, "unterminated quoted CSV field");
  return cells;
}

inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  Table t;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      fail(ErrorKind::Format, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (first) fail(ErrorKind::Format, path.string() + ": empty CSV");
  return t;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Round-trip precision ("%.17g"); NaN is written as "nan".
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline double to_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::nan("");
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::Format, "bad number for " + what + ": '" + s + "'");
  }
}

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::trunc), path_(path) {
    if (!out_) fail(ErrorKind::Io, "cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(cells[i]);
    }
    out_ << '\n';
    if (!out_) fail(ErrorKind::Io, "write failed: " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace edgeroute::csv
