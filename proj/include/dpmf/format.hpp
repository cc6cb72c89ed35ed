#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dpmf {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Throws InvalidArgument when `text` is not a complete decimal number.
double parse_double(std::string_view text);

std::uint64_t parse_uint(std::string_view text);

}  // namespace dpmf
