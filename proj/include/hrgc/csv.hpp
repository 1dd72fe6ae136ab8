#pragma once

// Minimal RFC 4180 reader/writer shared by every CSV interface in the project.
// Lines starting with '#' are comments; blank lines are skipped.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hrgc/error.hpp"

namespace hrgc::csv {

struct Row {
  std::size_t line = 0; // 1-based physical line number
  std::vector<std::string> cells;
};

struct Table {
  std::vector<std::string> header;
  std::size_t header_line = 0;
  std::vector<Row> rows;

  /// Column index for `name`, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line, const std::string& source,
                                           std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      out.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ParseError(source, line_no, "", "unterminated quoted field");
  out.push_back(was_quoted ? cur : std::string(trim(cur)));
  return out;
}

/// Parses `text` into header + rows. Every data row must have the header's cell count.
inline Table parse(std::string_view text, const std::string& source = {}) {
  Table table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  // Strip a UTF-8 byte order mark.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    auto cells = split_line(line, source, line_no);
    if (!have_header) {
      table.header = std::move(cells);
      table.header_line = line_no;
      have_header = true;
    } else {
      if (cells.size() != table.header.size())
        throw ParseError(source, line_no, "",
                         "expected " + std::to_string(table.header.size()) + " cells, found " +
                             std::to_string(cells.size()));
      table.rows.push_back(Row{line_no, std::move(cells)});
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw ParseError(source, 0, "", "missing header row");
  return table;
}

/// Throws naming the first missing column.
inline std::vector<std::size_t> require_columns(const Table& table, const std::vector<std::string>& names,
                                                const std::string& source) {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) {
    auto i = table.find(n);
    if (!i) throw ParseError(source, table.header_line, n, "missing required column");
    idx.push_back(*i);
  }
  return idx;
}

inline double parse_double(std::string_view cell, const std::string& source, std::size_t line,
                           const std::string& column) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError(source, line, column, "not a number: '" + std::string(cell) + "'");
  if (!std::isfinite(value)) throw ParseError(source, line, column, "non-finite value");
  return value;
}

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, ptr);
}

/// Fixed-point formatting used by the batch result files.
inline std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0; // fold -0
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  (void)ec;
  std::string s(buf, ptr);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string quote(std::string_view cell) {
  if (cell.find_first_of(",\"\n") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += quote(cells[i]);
  }
  return out;
}

} // namespace hrgc::csv
