#pragma once

#include <string>
#include <vector>

#include "ldpath/convex_duality.hpp"

namespace ldpath::badness {

enum class RateKind { bernoulli, double_well, tabulated };

// Static rate function I(m) on [-1, 1], normalized so that min I = 0.
class RateFunctionSpec {
 public:
  // Relative entropy of the product law with mean x against mean y.
  static RateFunctionSpec bernoulli(double y);
  // bernoulli(0)(m) - (beta/2) m^2, shifted to minimum 0; two wells for beta > 1.
  static RateFunctionSpec double_well(double beta);
  // Piecewise-linear interpolation of samples on an increasing grid inside
  // [-1, 1]; +inf outside the grid.
  static RateFunctionSpec tabulated(std::vector<double> grid, std::vector<double> values);

  double operator()(double m) const;
  double derivative(double m) const;

  RateKind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  const std::vector<double>& minimizers() const { return minimizers_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::string describe() const;

  ScalarFunction as_function() const;

 private:
  RateFunctionSpec() = default;

  RateKind kind_ = RateKind::bernoulli;
  double parameter_ = 0.0;
  double shift_ = 0.0;
  double lo_ = -1.0;
  double hi_ = 1.0;
  std::vector<double> minimizers_;
  std::vector<double> grid_;
  std::vector<double> values_;
};

}  // namespace ldpath::badness
