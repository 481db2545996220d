#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ldpath/magnetization.hpp"
#include "ldpath/poisson_walk.hpp"
#include "ldpath/rate_function.hpp"
#include "ldpath/trajectory.hpp"

using namespace ldpath;
using namespace ldpath::trajectory;
namespace mag = ldpath::magnetization;

namespace {

const Lagrangian& model() {
  static const Lagrangian L = mag::lagrangian_model();
  return L;
}

Lagrangian without_derivatives() {
  Lagrangian L = mag::lagrangian_model();
  L.derivatives = nullptr;
  return L;
}

}  // namespace

TEST_CASE("action of simple paths") {
  for (double m0 : {-0.8, 0.5}) {
    const auto drift = TrajectoryGrid::sample(1.0, 2000, [m0](double t) { return m0 * std::exp(-2 * t); });
    CHECK(std::abs(action_integral(model(), drift)) <= 1e-8);
  }
  const auto flat = TrajectoryGrid::sample(1.7, 100, [](double) { return 0.5; });
  CHECK(action_integral(model(), flat) == doctest::Approx(1.7 * mag::lagrangian(0.5, 0.0)).epsilon(1e-13));
  // Midpoint state 1 with positive velocity cannot be realized.
  CHECK(action_integral(model(), TrajectoryGrid(1.0, {0.9, 1.1, 0.9})) == kInf);
  CHECK(action_integral(model(), TrajectoryGrid(1.0, {0.9, 1.3, 1.0})) == kInf);
}

TEST_CASE("extremal action agrees with the exact oracle") {
  const double action = action_integral(model(), mag::extremal(0.5, 0.0, 1.0).sample(2000));
  CHECK(action > 0.0);
  const double rate = -mag::exact_log_prob(2000, 0.5, 1.0, 0.0) / 2000.0;
  CHECK(std::abs(rate - action) <= 0.05);
}

TEST_CASE("fixed-endpoint minimization") {
  SolverOptions so;
  const auto relax = minimize_action_fixed(model(), 0.5, 0.5 * std::exp(-2.0), 1.0, so);
  CHECK(std::abs(relax.value) <= 1e-10);
  for (int i = 0; i <= so.steps; ++i) {
    CHECK(std::abs(relax.path.values[i] - 0.5 * std::exp(-2.0 * relax.path.time(i))) <= 1e-6);
  }
  const auto best = minimize_action_fixed(model(), 0.5, 0.0, 1.0, so);
  const auto ext = mag::extremal(0.5, 0.0, 1.0);
  CHECK(std::abs(best.value - action_integral(model(), ext.sample(so.steps))) <= 1e-4);
  CHECK(euler_lagrange_residual(model(), best.path) <= 1e-3);
  for (int i = 0; i <= so.steps; ++i) CHECK(std::abs(best.path.values[i] - ext(best.path.time(i))) <= 1e-4);

  // Finite-difference derivatives reach the same minimum.
  const auto fd = minimize_action_fixed(without_derivatives(), 0.5, 0.0, 1.0, so);
  CHECK(fd.value == doctest::Approx(best.value).epsilon(1e-7));
}

TEST_CASE("solver result does not depend on the worker count") {
  SolverOptions a;
  a.workers = 1;
  SolverOptions b = a;
  b.workers = 3;
  const auto ra = minimize_action_fixed(model(), -0.3, 0.6, 0.7, a);
  const auto rb = minimize_action_fixed(model(), -0.3, 0.6, 0.7, b);
  CHECK(ra.value == rb.value);
  CHECK(ra.path.values == rb.path.values);
}

TEST_CASE("grid refinement and dynamic-programming consistency") {
  double previous = 0.0, previous_change = kInf;
  for (int steps : {50, 100, 200, 400}) {
    SolverOptions so;
    so.steps = steps;
    const double v = minimize_action_fixed(model(), 0.6, -0.2, 1.0, so).value;
    if (steps > 50) {
      const double change = std::abs(v - previous);
      CHECK(change <= 1.0 / steps);
      CHECK(change < previous_change);
      previous_change = change;
    }
    previous = v;
  }

  SolverOptions half;
  half.steps = 100;
  SolverOptions whole;
  whole.steps = 200;
  const double direct = minimize_action_fixed(model(), 0.6, -0.2, 1.0, whole).value;
  double best = kInf;
  const double centre = mag::extremal(0.6, -0.2, 1.0)(0.5);
  for (int i = -40; i <= 40; ++i) {
    const double x = centre + 0.0005 * i;
    best = std::min(best, minimize_action_fixed(model(), 0.6, x, 0.5, half).value +
                              minimize_action_fixed(model(), x, -0.2, 0.5, half).value);
  }
  CHECK(best >= direct - 1e-10);
  CHECK(best - direct <= 1e-5);
}

TEST_CASE("velocity-only Lagrangian gives straight lines") {
  const poisson_walk::Params p{1.0, 0.0, 1};
  Lagrangian L;
  L.value = [p](double, double q) { return poisson_walk::lagrangian(q, p); };
  SolverOptions so;
  so.steps = 40;
  const auto r = minimize_action_fixed(L, 0.0, 2.0, 1.0, so);
  CHECK(r.value == doctest::Approx(poisson_walk::lagrangian(2.0, p)).epsilon(1e-9));
  CHECK_THROWS_WITH(minimize_action_fixed(L, 1.0, 0.0, 1.0, so), doctest::Contains("NoFeasiblePath"));
}

TEST_CASE("Euler-Lagrange residual") {
  const auto ext = mag::extremal(0.5, 0.0, 1.0);
  CHECK(euler_lagrange_residual(model(), ext.sample(2000)) <= 1e-4);
  const auto drift = TrajectoryGrid::sample(1.0, 2000, [](double t) { return 0.5 * std::exp(-2 * t); });
  CHECK(euler_lagrange_residual(model(), drift) <= 1e-4);
  const auto bent = TrajectoryGrid::sample(1.0, 2000, [&](double t) { return ext(t) + 0.05 * std::sin(M_PI * t); });
  CHECK(euler_lagrange_residual(model(), bent) > 1e-2);
  CHECK(euler_lagrange_residual(without_derivatives(), ext.sample(2000)) <= 1e-4);
}

TEST_CASE("open start with a unique typical state") {
  const auto I = badness::RateFunctionSpec::bernoulli(0.3);
  OpenStartOptions opts;
  const double T = 0.8;
  const auto r = minimize_action_open_start(model(), I.as_function(), 0.3 * std::exp(-2 * T), T, opts);
  REQUIRE(r.minimizers.size() == 1);
  CHECK(r.best().gamma0 == doctest::Approx(0.3).epsilon(1e-5));
  CHECK(std::abs(r.best_value) <= 1e-9);

  const auto off = minimize_action_open_start(model(), I.as_function(), -0.4, T, opts);
  REQUIRE(off.minimizers.size() == 1);
  CHECK(off.best().transversality_residual <= 1e-4);
}

TEST_CASE("open start with a flat initial cost") {
  const ScalarFunction zero{[](double) { return 0.0; }, [](double) { return 0.0; }, -1.0, 1.0};
  const auto r = minimize_action_open_start(model(), zero, 0.1, 1.0, {});
  CHECK(std::abs(r.best_value) <= 1e-9);
  CHECK(r.best().gamma0 == doctest::Approx(0.1 * std::exp(2.0)).epsilon(1e-5));
  CHECK(r.best().transversality_residual <= 1e-4);
}

TEST_CASE("double well gives a symmetric pair of minimizers") {
  const auto I = badness::RateFunctionSpec::double_well(1.5);
  OpenStartOptions opts;
  opts.solver.steps = 200;
  const auto r = minimize_action_open_start(model(), I.as_function(), 0.0, 3.0, opts);
  REQUIRE(r.minimizers.size() == 2);
  CHECK(r.minimizers[0].gamma0 == doctest::Approx(-r.minimizers[1].gamma0).epsilon(1e-6));
  CHECK(r.minimizers[1].gamma0 > 0.1);
  CHECK(r.minimizers[0].value == doctest::Approx(r.minimizers[1].value).epsilon(1e-8));
  for (const auto& m : r.minimizers) CHECK(m.transversality_residual <= 1e-4);
}

TEST_CASE("Hamilton flow") {
  const auto flow = hamilton_flow_integrate(mag::hamilton_rhs, mag::hamiltonian, 0.4, 0.0, 1.0, 1e-3);
  for (std::size_t i = 0; i < flow.t.size(); ++i) {
    CHECK(std::abs(flow.m[i] - 0.4 * std::exp(-2 * flow.t[i])) <= 1e-8);
    CHECK(flow.p[i] == 0.0);
  }
  const auto tilted = hamilton_flow_integrate(mag::hamilton_rhs, mag::hamiltonian, 0.3, 0.1, 1.0, 1e-4);
  CHECK(tilted.max_energy_drift <= 1e-8);
  CHECK(std::tanh(tilted.p.back()) / std::tanh(0.1) == doctest::Approx(std::exp(2.0)).epsilon(1e-8));
  CHECK_THROWS_WITH(hamilton_flow_integrate(mag::hamilton_rhs, mag::hamiltonian, 0.9, 1.0, 2.0, 1e-3),
                    doctest::Contains("DomainExit"));
  CHECK_THROWS(hamilton_flow_integrate(mag::hamilton_rhs, mag::hamiltonian, 0.1, 0.0, 1.0, 0.1));
}

TEST_CASE("trajectory CSV") {
  std::ostringstream out;
  write_trajectory_csv(out, TrajectoryGrid(1.0, {0.5, 0.25, 0.0}));
  CHECK(out.str() == "t,value\n0,0.5\n0.5,0.25\n1,0\n");
}
