#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clocksync::csv {

/// Shortest-round-trip decimal rendering of a double ("nan"/"inf" for non-finite).
std::string format(double value);

/// Decimal rendering with a fixed number of significant digits (general notation).
std::string format_sig(double value, int digits);

/// The value a double takes after a round trip through `format_sig(value, 12)`.
double round_sig12(double value);

/// Parses a full field as a double; throws std::invalid_argument otherwise.
double parse_double(std::string_view field);

/// Parses a full field as a non-negative integer.
long long parse_int(std::string_view field);

/// Splits on `delim`, trimming surrounding whitespace of each field.
std::vector<std::string> split(std::string_view line, char delim = ',');

std::string_view trim(std::string_view s);

}  // namespace clocksync::csv
