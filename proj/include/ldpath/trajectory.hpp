#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ldpath/convex_duality.hpp"
#include "ldpath/error.hpp"

namespace ldpath::trajectory {

struct LagrangianDerivatives {
  double x = 0.0;   // dL/dx
  double q = 0.0;   // dL/dq
  double xx = 0.0;
  double xq = 0.0;
  double qq = 0.0;
};

// Running cost L(x, q) of moving through state x with velocity q. The value may
// be +inf for infeasible velocities. Derivatives are optional; without them the
// solvers fall back to central finite differences.
struct Lagrangian {
  std::function<double(double, double)> value;
  std::function<LagrangianDerivatives(double, double)> derivatives;
  std::function<double(double)> drift;  // zero-cost velocity field, optional
  double state_lo = -kInf;               // iterates stay strictly inside
  double state_hi = kInf;

  double operator()(double x, double q) const { return value(x, q); }
  LagrangianDerivatives derivs(double x, double q) const;
  bool admissible(double x) const { return x > state_lo && x < state_hi; }
};

// Uniformly sampled path on [0, T]; values.size() == steps + 1.
struct TrajectoryGrid {
  double T = 1.0;
  std::vector<double> values;

  TrajectoryGrid() = default;
  TrajectoryGrid(double horizon, std::vector<double> samples);
  static TrajectoryGrid sample(double horizon, int steps, const std::function<double(double)>& path);

  int steps() const { return static_cast<int>(values.size()) - 1; }
  double dt() const { return T / steps(); }
  double time(int i) const { return T * i / steps(); }
};

/// Discrete action sum_i dt * L((x_i + x_{i+1})/2, (x_{i+1} - x_i)/dt).
/// Each interval contributes independently, so the action is additive over
/// any partition of the grid. Returns +inf if any term is infinite.
double action_integral(const Lagrangian& lagrangian, const TrajectoryGrid& traj);

struct SolverOptions {
  int steps = 400;
  int jitter_restarts = 4;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  int max_iterations = 200;
  double gradient_tol = 1e-11;
  std::vector<TrajectoryGrid> extra_starts;  // e.g. a closed-form extremal
};

struct FixedResult {
  TrajectoryGrid path;
  double value = kInf;
};

/// Minimizes the discrete action over interior grid values with both
/// endpoints fixed. Starts: linear interpolation, drift-then-jump,
/// jump-then-drift, jittered linear paths and any extra starts; each start is
/// relaxed by damped Newton steps on the tridiagonal Hessian with backtracking
/// that rejects infeasible trial points. Throws NoFeasiblePath when every start
/// has infinite action.
FixedResult minimize_action_fixed(const Lagrangian& lagrangian, double start, double end, double T,
                                  const SolverOptions& opts = {});

struct OpenStartMinimizer {
  TrajectoryGrid path;
  double value = kInf;  // I(gamma_0) + action
  double gamma0 = 0.0;
  double transversality_residual = 0.0;
};

struct OpenStartOptions {
  SolverOptions solver;
  int initial_points = 21;
  double cluster_value_tol = 1e-5;
  double cluster_gamma_tol = 1e-3;
};

struct OpenStartResult {
  std::vector<OpenStartMinimizer> minimizers;  // cluster set, sorted by gamma0
  std::vector<OpenStartMinimizer> local_minima;  // every distinct local minimum found
  double best_value = kInf;

  const OpenStartMinimizer& best() const;
};

/// Minimizes I(gamma_0) + action over the free start value and the interior,
/// with gamma_T = end. Returns every distinct local minimizer whose value lies
/// within cluster_value_tol of the global minimum. The reported transversality
/// residual is |dL/dq at t=0 - I'(gamma_0)|, with the initial momentum
/// extrapolated to second order from the first interval.
OpenStartResult minimize_action_open_start(const Lagrangian& lagrangian, const ScalarFunction& initial_cost,
                                           double end, double T, const OpenStartOptions& opts = {});

/// max over interior nodes of |d/dt dL/dq - dL/dx|, using midpoint momenta
/// (p_{i+1/2} - p_{i-1/2}) / dt against the averaged dL/dx at the two
/// neighbouring midpoints. Second-order accurate for smooth paths.
double euler_lagrange_residual(const Lagrangian& lagrangian, const TrajectoryGrid& traj);

struct PhasePoint {
  double m;
  double p;
};

struct FlowPath {
  std::vector<double> t;
  std::vector<double> m;
  std::vector<double> p;
  double max_energy_drift = 0.0;
};

using HamiltonRhs = std::function<PhasePoint(double m, double p)>;
using Hamiltonian = std::function<double(double m, double p)>;

/// Classical RK4 integration of (m', p') = rhs(m, p). Throws DomainExit when m
/// leaves [state_lo, state_hi].
FlowPath hamilton_flow_integrate(const HamiltonRhs& rhs, const Hamiltonian& energy, double m0, double p0, double T,
                                 double dt, double state_lo = -1.0, double state_hi = 1.0);

void write_trajectory_csv(std::ostream& out, const TrajectoryGrid& traj);

}  // namespace ldpath::trajectory
