#pragma once

// Minimal CSV handling for the fixed-schema input tables. No quoting rules:
// fields never contain commas, so a plain split is the whole grammar.

#include <cstdint>
#include <string>
#include <vector>

namespace forensics::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int64_t> line_numbers;  // 1-based source line of each row
  std::string path;
};

// Reads a CSV file. Throws std::runtime_error with file/line context on
// missing file, empty file, or ragged rows.
Table read_table(const std::string& path);

Table parse_table(const std::string& content, const std::string& path_label);

std::string format_row(const std::vector<std::string>& fields);

// Field parsers carrying file/line context in errors.
int64_t to_int64(const std::string& field, const std::string& where);
double to_double(const std::string& field, const std::string& where);

// ISO-8601 UTC timestamps: "YYYY-MM-DDTHH:MM:SSZ" to seconds since epoch
// and back. Rejects anything else.
int64_t parse_iso8601_utc(const std::string& text, const std::string& where);
std::string format_iso8601_utc(int64_t epoch_seconds);

}  // namespace forensics::csv
