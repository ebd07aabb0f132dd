#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace mdiqkd {

// 17 significant digits: every double parses back to itself.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace mdiqkd
