#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace ldpath {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Every failure raised by the library carries a short kind name
// (e.g. "NonCoercive", "PathLeavesDomain") that the CLI reports verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace ldpath
