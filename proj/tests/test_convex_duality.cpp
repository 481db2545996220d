#include <doctest.h>

#include <cmath>
#include <vector>

#include "ldpath/convex_duality.hpp"
#include "ldpath/magnetization.hpp"

using namespace ldpath;

namespace {

ScalarFunction quadratic() {
  return {[](double p) { return 0.5 * p * p; }, [](double p) { return p; }};
}

// Brute-force conjugate by dense grid maximization.
double grid_conjugate(const ScalarFunction& f, double slope, double lo, double hi, int n) {
  double best = -kInf;
  for (int i = 0; i <= n; ++i) {
    const double p = lo + (hi - lo) * i / n;
    best = std::max(best, slope * p - f(p));
  }
  return best;
}

}  // namespace

TEST_CASE("quadratic is self-conjugate") {
  const auto r = conjugate(quadratic(), 1.0);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.argmax == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("exponential conjugate vanishes at slope one") {
  const ScalarFunction f{[](double p) { return std::expm1(p); }, [](double p) { return std::exp(p); }};
  const auto r = conjugate(f, 1.0);
  CHECK(std::abs(r.value) <= 1e-10);
  CHECK(std::abs(r.argmax) <= 1e-8);
  // q log q - q + 1 elsewhere
  const auto r2 = conjugate(f, 3.0);
  CHECK(r2.value == doctest::Approx(3.0 * std::log(3.0) - 2.0).epsilon(1e-12));
}

TEST_CASE("conjugate of the magnetization Hamiltonian at m = 0, slope 2") {
  const auto r = conjugate(magnetization::hamiltonian_function(0.0), 2.0);
  CHECK(r.value == doctest::Approx(0.467160024646448).epsilon(1e-11));
}

TEST_CASE("matches a brute-force grid maximum without a derivative") {
  const ScalarFunction f{[](double p) { return std::cosh(p) + 0.3 * p * p * p * p; }, {}};
  for (double slope : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
    const double brute = grid_conjugate(f, slope, -5.0, 5.0, 200000);
    CHECK(conjugate(f, slope).value == doctest::Approx(brute).epsilon(1e-8));
  }
}

TEST_CASE("argmax is stationary when a derivative exists") {
  const auto f = magnetization::hamiltonian_function(0.3);
  for (double slope : {-2.0, 0.0, 1.0, 3.0}) {
    const auto r = conjugate(f, slope);
    CHECK(std::abs(f.derivative(r.argmax) - slope) <= 1e-8);
  }
}

TEST_CASE("Fenchel inequality on a probe grid") {
  const auto f = magnetization::hamiltonian_function(-0.4);
  for (double p = -2.0; p <= 2.0; p += 0.25) {
    for (double q = -3.0; q <= 3.0; q += 0.5) {
      CHECK(p * q <= f(p) + conjugate(f, q).value + 1e-10);
    }
  }
}

TEST_CASE("double conjugation reproduces a convex function on a compact bracket") {
  const ScalarFunction f{[](double p) { return std::exp(p) + p * p; }, {}, -3.0, 3.0};
  ConjugateOptions inner;
  inner.bracket_lo = -3.0;
  inner.bracket_hi = 3.0;
  const ScalarFunction fstar{[&](double q) { return conjugate(f, q, inner).value; }, {}};
  ConjugateOptions outer;
  outer.bracket_lo = -30.0;
  outer.bracket_hi = 30.0;
  for (double p : {-1.5, -0.5, 0.0, 0.7, 1.4}) {
    CHECK(conjugate(fstar, p, outer).value == doctest::Approx(f(p)).epsilon(1e-6));
  }
}

TEST_CASE("non-coercive and non-convex inputs are rejected") {
  const ScalarFunction linear{[](double p) { return p; }, {}};
  CHECK_THROWS_WITH_AS(conjugate(linear, 2.0), doctest::Contains("NonCoercive"), Error);
  const ScalarFunction wavy{[](double p) { return std::cos(3.0 * p) + 0.01 * p * p; }, {}};
  try {
    conjugate(wavy, 0.0);
    FAIL("expected NotConvex");
  } catch (const Error& e) {
    CHECK(e.kind() == "NotConvex");
  }
}

TEST_CASE("duality gap of analytic pairs and a shifted pair") {
  const std::vector<double> states{-0.9, -0.3, 0.0, 0.5, 0.9};
  std::vector<double> slopes;
  for (double p = -2.0; p <= 2.0001; p += 0.1) slopes.push_back(p);
  const double gap = duality_gap(magnetization::hamiltonian_function, magnetization::lagrangian_function, states,
                                 slopes);
  CHECK(gap <= 1e-8);

  const ScalarFamily quad = [](double) { return quadratic(); };
  CHECK(duality_gap(quad, quad, states, slopes) <= 1e-10);

  const ScalarFamily shifted = [](double) {
    return ScalarFunction{[](double q) { return 0.5 * q * q + 0.1; }, [](double q) { return q; }};
  };
  CHECK(duality_gap(quad, shifted, states, slopes) == doctest::Approx(0.1).epsilon(1e-8));
}
