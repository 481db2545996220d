#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ldpath/convex_duality.hpp"
#include "ldpath/trajectory.hpp"

// Magnetization of N independently flipping spins: jumps of -2/N at rate
// N(1+m)/2 and +2/N at rate N(1-m)/2.
namespace ldpath::magnetization {

// Validated magnetization value in [-1, 1].
class MagPoint {
 public:
  explicit MagPoint(double m);
  double value() const { return m_; }

 private:
  double m_;
};

double hamiltonian(double m, double p);
double hamiltonian_dp(double m, double p);

// Closed-form Legendre transform of `hamiltonian` in p:
//   L(m, q) = (q/2) log((q + R) / (2(1 - m))) - R/2 + 1,  R = sqrt(q^2 + 4(1 - m^2)),
// extended by continuity to m = ±1 and +inf for infeasible velocities.
double lagrangian(double m, double q);

// Maximizing momentum p*(m, q) = dL/dq.
double optimal_momentum(double m, double q);
trajectory::LagrangianDerivatives lagrangian_derivatives(double m, double q);

ScalarFunction hamiltonian_function(double m);
ScalarFunction lagrangian_function(double m);

trajectory::PhasePoint hamilton_rhs(double m, double p);

// L with analytic derivatives, drift -2m and admissible interval (-1, 1).
trajectory::Lagrangian lagrangian_model();

// m(t) = C1 e^{2t} + C2 e^{-2t} through m(0) = m0, m(T) = mT.
struct Extremal {
  double C1;
  double C2;
  double T;

  double operator()(double t) const;
  trajectory::TrajectoryGrid sample(int steps) const;
};

Extremal extremal(double m0, double mT, double T);

// log P(m_N(T) = mT | m_N(0) = m0), exact for finite N.
double exact_log_prob(int N, double m0, double T, double mT);

// (1/N) log E[exp(lambda * sum_i sigma_i(t))] from magnetization m.
double constrained_pressure(double lambda, double m, double t);

struct MonteCarloEstimate {
  double value;
  double standard_error;  // bootstrap
};

// Simulated counterpart of constrained_pressure for N spins.
MonteCarloEstimate simulate_log_moment(int N, double m, double lambda, double t, int replicas, std::uint64_t seed,
                                       int bootstrap_resamples = 400, unsigned workers = 1);

struct RateRow {
  int N;
  double m0;
  double T;
  double mT;
  double exact_rate;
  double action;
  double gap;
};

std::vector<RateRow> rate_table(std::span<const int> Ns, double m0, double T, double mT, double action);
void write_rate_csv(std::ostream& out, std::span<const RateRow> rows);

}  // namespace ldpath::magnetization
