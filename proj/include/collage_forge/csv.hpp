/* Copyright 2026 The collage_forge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "collage_forge/errors.hpp"

namespace cforge::csv {

using Row = std::vector<std::string>;

/// Splits one CSV line. Double-quoted fields may contain commas; "" inside a
/// quoted field is a literal quote. Embedded newlines are not supported.
inline Row split_line(std::string_view line) {
  Row fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += quote(row[i]);
  }
  return out;
}

struct Table {
  std::filesystem::path path;
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;  // 1-based, parallel to rows

  [[noreturn]] void fail(std::size_t row, const std::string& msg) const {
    throw Error(ErrorKind::kParse, path.string() + ":" +
                                       std::to_string(line_numbers[row]) +
                                       ": " + msg);
  }
};

/// Reads a CSV with a mandatory header equal to `expected_header`. Blank lines
/// are skipped; every record must have exactly as many fields as the header.
inline Table read_table(const std::filesystem::path& path,
                        const Row& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  Table t;
  t.path = path;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_line(line);
    if (!have_header) {
      for (auto& f : fields) {
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(0, 1);
      }
      if (fields != expected_header) {
        throw Error(ErrorKind::kParse, path.string() + ":" +
                                           std::to_string(lineno) +
                                           ": unexpected header '" + line +
                                           "', want '" + join(expected_header) +
                                           "'");
      }
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != expected_header.size()) {
      throw Error(ErrorKind::kParse,
                  path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(expected_header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) {
    throw Error(ErrorKind::kParse, path.string() + ": missing header row");
  }
  return t;
}

template <typename Int>
Int parse_int(const Table& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  Int value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) {
    t.fail(row, "field '" + t.header[col] + "' is not an integer: '" + s + "'");
  }
  return value;
}

inline double parse_real(const Table& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows[row][col];
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0;
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    t.fail(row, "field '" + t.header[col] + "' is not a number: '" + s + "'");
  }
  return v;
}

/// Buffered writer that reports I/O failure as IoError.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  }
  void row(const Row& r) { out_ << join(r) << '\n'; }
  void close() {
    out_.close();
    if (!out_) throw Error(ErrorKind::kIo, "write failed for " + path_.string());
  }
  ~Writer() {
    if (out_.is_open()) out_.close();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace cforge::csv
