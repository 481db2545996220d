#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace ldpath {

// Immutable table of log(k!) for k <= size. `shared` hands out a process-wide
// instance (built once, read-only afterwards) and falls back to a private
// table for sizes beyond it.
class LogFactorialTable {
 public:
  explicit LogFactorialTable(std::size_t size) : table_(size + 1, 0.0) {
    for (std::size_t k = 1; k <= size; ++k) table_[k] = table_[k - 1] + std::log(static_cast<double>(k));
  }

  static const LogFactorialTable& shared(std::size_t at_least) {
    static const LogFactorialTable table(1u << 17);
    if (at_least <= table.size()) return table;
    thread_local LogFactorialTable big(0);
    if (big.size() < at_least) big = LogFactorialTable(at_least);
    return big;
  }

  std::size_t size() const { return table_.size() - 1; }
  double operator()(std::size_t k) const { return table_[k]; }

  double log_choose(long n, long k) const {
    if (k < 0 || k > n) return -INFINITY;
    return table_[static_cast<std::size_t>(n)] - table_[static_cast<std::size_t>(k)] -
           table_[static_cast<std::size_t>(n - k)];
  }

 private:
  std::vector<double> table_;
};

}  // namespace ldpath
