#include "csv.h"

#include <charconv>
#include <cmath>

#include "clrmix/errors.h"

namespace clrmix::csv {

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  // Skip a UTF-8 byte order mark.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  while (i < n) {
    Row row;
    row.line = line;
    std::string field;
    bool row_done = false;
    bool any_content = false;
    while (!row_done) {
      if (i < n && text[i] == '"') {
        const std::size_t open_line = line;
        ++i;
        any_content = true;
        while (true) {
          if (i >= n) throw ParseError("unterminated quoted field", open_line, row.fields.size() + 1);
          const char c = text[i++];
          if (c == '"') {
            if (i < n && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
      }
      while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
        field.push_back(text[i++]);
        any_content = true;
      }
      if (i < n && text[i] == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        any_content = true;
        ++i;
        continue;
      }
      row.fields.push_back(std::move(field));
      field.clear();
      if (i < n && text[i] == '\r') ++i;
      if (i < n && text[i] == '\n') ++i;
      ++line;
      row_done = true;
    }
    if (any_content) rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += format_field(fields[i]);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

double parse_double(std::string_view cell, std::size_t line, std::size_t column) {
  std::size_t b = 0;
  std::size_t e = cell.size();
  while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
  while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
  const std::string_view trimmed = cell.substr(b, e - b);
  if (trimmed.empty()) throw ParseError("empty numeric cell", line, column);
  double value = 0.0;
  const char* first = trimmed.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, trimmed.data() + trimmed.size(), value);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size() || !std::isfinite(value)) {
    throw ParseError("'" + std::string(trimmed) + "' is not a finite number", line, column);
  }
  return value;
}

}  // namespace clrmix::csv
