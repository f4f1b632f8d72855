#ifndef DMPF_CSV_HPP
#define DMPF_CSV_HPP

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace dmpf::csv {

/// Shortest decimal text that round-trips the double exactly.
std::string format(double v);

/// Splits one CSV line on commas, trimming surrounding blanks from each field.
std::vector<std::string> split(std::string_view line);

double parse_double(std::string_view field);

/// Reads the next non-empty line; false at end of stream.
bool next_line(std::istream& in, std::string& line);

}  // namespace dmpf::csv

#endif  // DMPF_CSV_HPP
