#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace arwlab::csv {

/// RFC-4180 field quoting: fields containing comma, quote, CR or LF are
/// wrapped in double quotes with embedded quotes doubled.
std::string escape(std::string_view field);

void write_row(std::ostream& os, const std::vector<std::string>& fields);

/// Parses one record. Returns false at end of input. Handles quoted fields
/// spanning lines.
bool read_row(std::istream& is, std::vector<std::string>& fields);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

} // namespace arwlab::csv
