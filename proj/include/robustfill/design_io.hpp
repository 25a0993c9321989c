#ifndef ROBUSTFILL_DESIGN_IO_HPP
#define ROBUSTFILL_DESIGN_IO_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "robustfill/design.hpp"

namespace robustfill {

// Malformed design file; line is 1-based, column names the offending field
// when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, std::string column = {});
  int line() const { return line_; }
  const std::string& column() const { return column_; }

 private:
  int line_;
  std::string column_;
};

// CSV schema:
//   name,<factor names...>
//   role,<control|noise_ext|noise_int ...>
//   transform,<none|tr|dt:ALPHA|hybrid ...>
//   <data rows, '.' decimal separator, full precision>
Design read_design(const std::string& path);
Design read_design(std::istream& in);
void write_design(const Design& design, const std::string& path);
void write_design(const Design& design, std::ostream& out);

}  // namespace robustfill

#endif
