#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ldpath/convex_duality.hpp"

namespace ldpath::poisson_walk {

// Walk on N^{-1} Z jumping +1/N at rate bN and -1/N at rate dN.
struct Params {
  double b = 1.0;
  double d = 1.0;
  int N = 1;

  void validate() const;
};

// b(e^λ - 1) + d(e^{-λ} - 1): the cumulant of a unit-time increment, i.e. the
// non-linear generator applied to linear functions.
double hamiltonian(double lambda, const Params& params);
double hamiltonian_derivative(double lambda, const Params& params);

// Legendre transform of `hamiltonian`; +inf for infeasible velocities
// (d = 0 and a < 0).
double lagrangian(double a, const Params& params);
double lagrangian_derivative(double a, const Params& params);
double lagrangian_second_derivative(double a, const Params& params);

ScalarFunction hamiltonian_function(const Params& params);
ScalarFunction lagrangian_function(const Params& params);

struct Path {
  std::vector<double> times;   // jump times, increasing, all < T
  std::vector<double> values;  // X_N immediately after each jump
  double horizon = 0.0;

  double final_value() const { return values.empty() ? 0.0 : values.back(); }
  double value_at(double t) const;
};

// Exact event-driven simulation from X_N(0) = 0.
Path simulate(const Params& params, double T, std::uint64_t seed);

// Mean and standard error of X_N(T) over independent replicas; replica i uses
// stream derive_seed(seed, i).
struct ReplicaMean {
  double mean;
  double standard_error;
};
ReplicaMean simulate_final_mean(const Params& params, double T, int replicas, std::uint64_t seed,
                                unsigned workers = 1);

// log P(X_N(t) = k/N | X_N(0) = 0), summing the two-Poisson convolution in
// log space until the remaining tail is below 1e-14 of the partial sum.
double exact_log_prob(const Params& params, double t, long k);

struct RateRow {
  int N;
  double t;
  double a;
  double empirical_rate;
  double analytic_rate;
  double gap;
};

// -(1/N) log P(X_N(t) = round(a t N)/N) against t L(a) for each N.
std::vector<RateRow> rate_convergence(double b, double d, std::span<const int> Ns, double t, double a);

void write_rate_csv(std::ostream& out, std::span<const RateRow> rows);

}  // namespace ldpath::poisson_walk
