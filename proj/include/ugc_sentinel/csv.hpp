#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ugc_sentinel/error.hpp"

namespace ugcs::csv {

// RFC-4180: fields containing comma, quote or newline are quoted, quotes
// doubled. Records end with \n; embedded newlines survive inside quotes.

inline std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

// Streaming parser over a whole buffer. Tracks the 1-based line number a
// record started on so malformed records can be reported usefully.
struct Record {
  std::vector<std::string> fields;
  std::size_t line_no = 0;
};

inline std::vector<Record> parse(std::string_view data) {
  std::vector<Record> records;
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    fields.push_back(cur);
    cur.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back({fields, record_line});
    fields.clear();
    record_line = line;
  };

  std::size_t i = 0;
  while (i < data.size()) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          cur.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      if (c == '\n') ++line;
      cur.push_back(c);
      ++i;
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && cur.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          cur.push_back('"');  // stray quote inside unquoted field: keep it
        }
        ++i;
        break;
      case ',':
        end_field();
        ++i;
        break;
      case '\r':
        if (i + 1 < data.size() && data[i + 1] == '\n') {
          ++i;  // swallow the CR of a CRLF
          break;
        }
        cur.push_back(c);
        ++i;
        break;
      case '\n':
        ++line;
        ++i;
        end_record();
        break;
      default:
        field_started = true;
        cur.push_back(c);
        ++i;
        break;
    }
  }
  if (in_quotes) throw ValidationError("csv: unterminated quoted field");
  if (!cur.empty() || !fields.empty()) end_record();
  return records;
}

inline std::vector<Record> parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("csv: cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace ugcs::csv
