#pragma once

#include <string>
#include <string_view>

namespace lrange {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict full-string double parse; throws std::invalid_argument.
double parse_double(std::string_view s);

/// Strict full-string unsigned parse; throws std::invalid_argument.
unsigned long long parse_unsigned(std::string_view s);

std::string_view trim(std::string_view s);

}  // namespace lrange
