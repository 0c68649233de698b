#pragma once

#include <string>
#include <string_view>

namespace phri {

/// Appends the shortest decimal text that parses back to exactly `v`.
void append_double(std::string& out, double v);
std::string format_double(double v);

/// Parses a full token as double ("nan"/"inf" accepted); throws FormatError otherwise.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

std::string_view trim(std::string_view s);

}  // namespace phri
