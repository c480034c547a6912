#pragma once

// Minimal RFC 4180 reader/writer: comma separated, double-quoted fields with
// "" escapes, LF or CRLF line endings. Blank lines are skipped.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace clrmix::csv {

struct Row {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
};

// Throws ParseError on an unterminated quoted field.
std::vector<Row> parse(std::string_view text);

std::string format_field(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);

// Shortest representation that round-trips exactly.
std::string format_double(double value);

// Throws ParseError(line, column) when the cell is not a finite number.
double parse_double(std::string_view cell, std::size_t line, std::size_t column);

}  // namespace clrmix::csv
