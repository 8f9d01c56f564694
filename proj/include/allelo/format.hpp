#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace allelo {

/// Shortest decimal that reads back to the same double; "inf" for +inf.
inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace allelo
