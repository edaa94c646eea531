#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hazefuse {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

/// Fixed-point with the given number of decimals.
std::string format_fixed(double v, int decimals);

/// Strict double parse of the whole string. Returns false on any junk.
bool parse_double(std::string_view text, double& out);

bool parse_int(std::string_view text, int& out);

std::vector<std::string> split(std::string_view text, char sep);

std::string trim(std::string_view text);

std::string to_lower(std::string_view text);

}  // namespace hazefuse
