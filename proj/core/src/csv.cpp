#include "trajagent/csv.hpp"

#include "trajagent/error.hpp"

namespace trajagent::csv {

bool Reader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in_, line)) return false;
  ++line_;
  record_line_ = line_;

  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"' && field.empty() && !was_quoted) {
        in_quotes = true;
        was_quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\r' && i + 1 == line.size()) {
        // CRLF line ending
      } else {
        field.push_back(c);
      }
    }
    if (!in_quotes) break;
    if (!std::getline(in_, line)) {
      throw Error(ErrorCode::kUnparsableRow,
                  "unterminated quoted field starting at line " + std::to_string(record_line_));
    }
    ++line_;
    field.push_back('\n');
  }
  fields.push_back(std::move(field));
  return true;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace trajagent::csv
