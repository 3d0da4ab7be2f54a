#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace trajagent::csv {

// RFC-4180 record reader. Quoted fields may span lines; line_no() reports the
// physical line on which the last record started.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Returns false at end of input. Throws Error(kUnparsableRow) on an
  // unterminated quote.
  bool next(std::vector<std::string>& fields);
  std::size_t line_no() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace trajagent::csv
