#pragma once

#include <cstdio>
#include <string>

namespace ldpath {

// Shortest round-trip decimal for CSV/JSON text output.
inline std::string fmt_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    double back = 0.0;
    if (std::sscanf(buf, "%lf", &back) == 1 && back == v) break;
  }
  return buf;
}

}  // namespace ldpath
