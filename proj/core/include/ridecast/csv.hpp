#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ridecast {

/// Minimal delimited-text reader: quoted fields, embedded commas and
/// escaped quotes, CR/LF endings. Rows are returned as raw string fields;
/// typing happens at the call site.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into `fields`. Returns false at end of input.
  /// Throws IoError if the underlying stream fails mid-read.
  bool next(std::vector<std::string>& fields);

  std::size_t line_number() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

/// Splits one line that is known to contain no quoted fields.
std::vector<std::string> split_simple(std::string_view line, char sep = ',');

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

/// Strict double parse of a whole field; rejects trailing garbage.
std::optional<double> parse_double(std::string_view text);

/// Strict integer parse of a whole field.
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace ridecast
