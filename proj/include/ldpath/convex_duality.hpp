#pragma once

#include <functional>
#include <span>

#include "ldpath/error.hpp"

namespace ldpath {

// A real function on a closed interval (possibly the whole line), optionally
// with its derivative. The evaluator may return +inf outside its effective
// domain; it must be safe to call concurrently.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;  // empty when not supplied
  double lo = -kInf;
  double hi = kInf;

  double operator()(double x) const { return value(x); }
  bool has_derivative() const { return static_cast<bool>(derivative); }
};

struct ConjugateOptions {
  double bracket_lo = -50.0;
  double bracket_hi = 50.0;
  double value_tol = 1e-10;
  double argmax_tol = 1e-8;
  int probe_points = 64;
  int max_doublings = 2;
};

struct ConjugateResult {
  double value;
  double argmax;
};

/// Convex conjugate sup_p [slope * p - f(p)].
///
/// The supremum is bracketed on a probe grid, refined by golden-section search
/// and polished by a safeguarded Newton iteration on f'(p) = slope when a
/// derivative is available. If the maximum still sits on an open edge of the
/// search interval after `max_doublings` outward doublings the conjugate is
/// treated as +inf and NonCoercive is raised. A midpoint-convexity violation on
/// the probe grid raises NotConvex.
ConjugateResult conjugate(const ScalarFunction& f, double slope, const ConjugateOptions& opts = {});

using ScalarFamily = std::function<ScalarFunction(double state)>;

/// max over (state, slope) of |H(x, p) - sup_q [p q - L(x, q)]|, with the
/// supremum computed by `conjugate`.
double duality_gap(const ScalarFamily& hamiltonian, const ScalarFamily& lagrangian,
                   std::span<const double> states, std::span<const double> slopes,
                   const ConjugateOptions& opts = {});

}  // namespace ldpath
