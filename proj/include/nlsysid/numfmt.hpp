#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nlsysid {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
// Accepts anything format_double emits plus "inf", "-inf", "nan".
double parse_double(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace nlsysid
