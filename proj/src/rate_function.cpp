#include "ldpath/rate_function.hpp"

#include <algorithm>
#include <cmath>

#include "ldpath/error.hpp"
#include "ldpath/finite_jump.hpp"
#include "ldpath/format.hpp"

namespace ldpath::badness {

namespace {

double bernoulli_value(double m, double y) {
  if (!(std::abs(m) <= 1.0)) return kInf;
  return finite_jump::product_lagrangian(m, y);
}

double bernoulli_derivative(double m, double y) { return std::atanh(m) - std::atanh(y); }

// Positive root of atanh(m) = beta m for beta > 1.
double curie_weiss_root(double beta) {
  double lo = 1e-12;
  double hi = 1.0 - 1e-16;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::atanh(mid) - beta * mid < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

RateFunctionSpec RateFunctionSpec::bernoulli(double y) {
  if (!(std::abs(y) < 1.0)) throw Error("InvalidParams", "bernoulli reference must satisfy |y| < 1");
  RateFunctionSpec r;
  r.kind_ = RateKind::bernoulli;
  r.parameter_ = y;
  r.minimizers_ = {y};
  return r;
}

RateFunctionSpec RateFunctionSpec::double_well(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("InvalidParams", "double_well needs beta > 0");
  RateFunctionSpec r;
  r.kind_ = RateKind::double_well;
  r.parameter_ = beta;
  if (beta > 1.0) {
    const double m = curie_weiss_root(beta);
    r.minimizers_ = {-m, m};
    r.shift_ = bernoulli_value(m, 0.0) - 0.5 * beta * m * m;
  } else {
    r.minimizers_ = {0.0};
  }
  return r;
}

RateFunctionSpec RateFunctionSpec::tabulated(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() < 2 || grid.size() != values.size()) throw Error("InvalidParams", "tabulated needs matching grids");
  if (!std::is_sorted(grid.begin(), grid.end()) || std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw Error("InvalidParams", "tabulated grid must be strictly increasing");
  }
  if (grid.front() < -1.0 || grid.back() > 1.0) throw Error("InvalidParams", "tabulated grid must lie in [-1, 1]");
  RateFunctionSpec r;
  r.kind_ = RateKind::tabulated;
  const double floor = *std::min_element(values.begin(), values.end());
  if (!std::isfinite(floor)) throw Error("InvalidParams", "tabulated values must be finite");
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] -= floor;
    if (values[i] == 0.0) r.minimizers_.push_back(grid[i]);
  }
  r.lo_ = grid.front();
  r.hi_ = grid.back();
  r.grid_ = std::move(grid);
  r.values_ = std::move(values);
  return r;
}

double RateFunctionSpec::operator()(double m) const {
  switch (kind_) {
    case RateKind::bernoulli:
      return bernoulli_value(m, parameter_);
    case RateKind::double_well: {
      const double base = bernoulli_value(m, 0.0);
      return base < kInf ? base - 0.5 * parameter_ * m * m - shift_ : kInf;
    }
    case RateKind::tabulated: {
      if (!(m >= lo_ && m <= hi_)) return kInf;
      const auto it = std::upper_bound(grid_.begin(), grid_.end(), m);
      const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - grid_.begin()), grid_.size() - 1);
      const std::size_t a = i - 1;
      const double w = (m - grid_[a]) / (grid_[i] - grid_[a]);
      return (1.0 - w) * values_[a] + w * values_[i];
    }
  }
  return kInf;
}

double RateFunctionSpec::derivative(double m) const {
  switch (kind_) {
    case RateKind::bernoulli:
      return bernoulli_derivative(m, parameter_);
    case RateKind::double_well:
      return std::atanh(m) - parameter_ * m;
    case RateKind::tabulated: {
      if (!(m >= lo_ && m <= hi_)) return std::nan("");
      const auto it = std::upper_bound(grid_.begin(), grid_.end(), m);
      const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - grid_.begin()), grid_.size() - 1);
      return (values_[i] - values_[i - 1]) / (grid_[i] - grid_[i - 1]);
    }
  }
  return std::nan("");
}

std::string RateFunctionSpec::describe() const {
  switch (kind_) {
    case RateKind::bernoulli:
      return "bernoulli(" + fmt_double(parameter_) + ")";
    case RateKind::double_well:
      return "double_well(" + fmt_double(parameter_) + ")";
    case RateKind::tabulated:
      return "tabulated(" + std::to_string(grid_.size()) + " points)";
  }
  return "unknown";
}

ScalarFunction RateFunctionSpec::as_function() const {
  const RateFunctionSpec self = *this;
  return {[self](double m) { return self(m); }, [self](double m) { return self.derivative(m); }, lo_, hi_};
}

}  // namespace ldpath::badness
