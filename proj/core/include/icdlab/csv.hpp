#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace icdlab {

// RFC 4180 writer: CRLF-free ("\n") rows, fields quoted only when needed.
class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields);
  void row(std::initializer_list<std::string> fields) { row(std::vector<std::string>(fields)); }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Shortest representation that round-trips through strtod.
std::string format_double(double v);

}  // namespace icdlab
