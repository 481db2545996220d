#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// End-to-end property suite: each check compares a computed quantity against
// an exact oracle, a closed form or a Monte Carlo estimate at a pinned
// tolerance. Results are deterministic given the seed, for any worker count.
namespace ldpath::criteria {

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  unsigned workers = 1;
};

struct Measurement {
  std::string name;
  double value;
  double bound;  // the tolerance or threshold the value is compared to
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::vector<Measurement> measurements;
  std::string note;
};

inline constexpr int kCount = 11;

// Runs check `id` (1..kCount). Errors from the library are caught and turned
// into a failing result carrying the error kind in `note`.
CriterionResult run(int id, const VerifyOptions& opts);
std::vector<CriterionResult> run_all(const VerifyOptions& opts, const std::vector<int>& ids = {});

// Deterministic text report (no timings): one block per criterion.
void write_report(std::ostream& out, const std::vector<CriterionResult>& results);

}  // namespace ldpath::criteria
