#include "ldpath/poisson_walk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldpath/format.hpp"
#include "ldpath/parallel.hpp"
#include "ldpath/random.hpp"

namespace ldpath::poisson_walk {

void Params::validate() const {
  if (!(b > 0.0) || !std::isfinite(b)) throw Error("InvalidParams", "forward rate b must be > 0");
  if (!(d >= 0.0) || !std::isfinite(d)) throw Error("InvalidParams", "backward rate d must be >= 0");
  if (N < 1) throw Error("InvalidParams", "scale N must be >= 1");
}

double hamiltonian(double lambda, const Params& p) {
  return p.b * std::expm1(lambda) + p.d * std::expm1(-lambda);
}

double hamiltonian_derivative(double lambda, const Params& p) {
  return p.b * std::exp(lambda) - p.d * std::exp(-lambda);
}

namespace {

// (a + sqrt(a^2 + 4bd)) / (2b), evaluated without cancellation for a < 0.
double optimal_exp_lambda(double a, const Params& p) {
  const double r = std::sqrt(a * a + 4.0 * p.b * p.d);
  if (a >= 0.0) return (a + r) / (2.0 * p.b);
  return 2.0 * p.d / (r - a);
}

}  // namespace

double lagrangian(double a, const Params& p) {
  if (p.d == 0.0) {
    if (a < 0.0) return kInf;
    if (a == 0.0) return p.b;
    return std::max(0.0, a * std::log(a / p.b) - a + p.b);
  }
  const double r = std::sqrt(a * a + 4.0 * p.b * p.d);
  return std::max(0.0, a * std::log(optimal_exp_lambda(a, p)) - r + p.b + p.d);
}

double lagrangian_derivative(double a, const Params& p) {
  if (p.d == 0.0) {
    if (a < 0.0) return kInf;
    if (a == 0.0) return -kInf;
    return std::log(a / p.b);
  }
  return std::log(optimal_exp_lambda(a, p));
}

double lagrangian_second_derivative(double a, const Params& p) {
  if (p.d == 0.0) return a > 0.0 ? 1.0 / a : kInf;
  return 1.0 / std::sqrt(a * a + 4.0 * p.b * p.d);
}

ScalarFunction hamiltonian_function(const Params& params) {
  return {[params](double l) { return hamiltonian(l, params); },
          [params](double l) { return hamiltonian_derivative(l, params); }};
}

ScalarFunction lagrangian_function(const Params& params) {
  ScalarFunction f{[params](double a) { return lagrangian(a, params); }, {}};
  if (params.d > 0.0) f.derivative = [params](double a) { return lagrangian_derivative(a, params); };
  return f;
}

double Path::value_at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

Path simulate(const Params& params, double T, std::uint64_t seed) {
  params.validate();
  if (!(T > 0.0)) throw Error("InvalidParams", "time horizon must be > 0");
  Rng rng(seed);
  const double total = params.N * (params.b + params.d);
  const double forward = params.b / (params.b + params.d);
  Path path;
  path.horizon = T;
  long position = 0;
  double t = rng.exponential(total);
  while (t < T) {
    position += rng.uniform() < forward ? 1 : -1;
    path.times.push_back(t);
    path.values.push_back(static_cast<double>(position) / params.N);
    t += rng.exponential(total);
  }
  return path;
}

ReplicaMean simulate_final_mean(const Params& params, double T, int replicas, std::uint64_t seed,
                                unsigned workers) {
  if (replicas < 2) throw Error("InvalidParams", "need at least two replicas");
  std::vector<double> finals(static_cast<std::size_t>(replicas));
  parallel_for(finals.size(), workers, [&](std::size_t i) {
    finals[i] = simulate(params, T, derive_seed(seed, i)).final_value();
  });
  double mean = 0.0;
  for (double v : finals) mean += v;
  mean /= replicas;
  double var = 0.0;
  for (double v : finals) var += (v - mean) * (v - mean);
  var /= (replicas - 1);
  return {mean, std::sqrt(var / replicas)};
}

double exact_log_prob(const Params& params, double t, long k) {
  params.validate();
  if (!(t > 0.0)) throw Error("InvalidParams", "time must be > 0");
  const double mb = params.N * params.b * t;
  const double md = params.N * params.d * t;
  if (params.d == 0.0) {
    if (k < 0) return -kInf;
    const double kk = static_cast<double>(k);
    return -mb + kk * std::log(mb) - std::lgamma(kk + 1.0);
  }
  const double log_mb = std::log(mb);
  const double log_md = std::log(md);
  const double kk = static_cast<double>(k);
  auto term = [&](double j) {
    return -mb - md + j * log_mb - std::lgamma(j + 1.0) + (j - kk) * log_md - std::lgamma(j - kk + 1.0);
  };
  const double j0 = static_cast<double>(std::max(0L, k));
  // Consecutive-term ratio mb*md / ((j+1)(j+1-k)) is decreasing in j, so the
  // terms are unimodal; start at the mode and sum outward.
  const double disc = kk * kk + 4.0 * mb * md;
  double mode = std::floor(0.5 * (kk + std::sqrt(disc)));
  mode = std::max(mode, j0);
  const double peak = term(mode);
  double sum = 1.0;  // relative to exp(peak)
  for (double j = mode - 1.0; j >= j0; j -= 1.0) {
    const double rel = std::exp(term(j) - peak);
    sum += rel;
    if (rel < 1e-17 * sum) break;
  }
  for (double j = mode + 1.0;; j += 1.0) {
    const double rel = std::exp(term(j) - peak);
    sum += rel;
    const double ratio = mb * md / ((j + 1.0) * (j + 1.0 - kk));
    if (ratio < 1.0 && rel * ratio / (1.0 - ratio) < 1e-16 * sum) break;
  }
  return peak + std::log(sum);
}

std::vector<RateRow> rate_convergence(double b, double d, std::span<const int> Ns, double t, double a) {
  std::vector<RateRow> rows;
  rows.reserve(Ns.size());
  for (int n : Ns) {
    const Params params{b, d, n};
    const long k = std::lround(a * t * n);
    const double empirical = -exact_log_prob(params, t, k) / n;
    const double analytic = t * lagrangian(a, params);
    rows.push_back({n, t, a, empirical, analytic, std::abs(empirical - analytic)});
  }
  return rows;
}

void write_rate_csv(std::ostream& out, std::span<const RateRow> rows) {
  out << "N,t,a,empirical_rate,analytic_rate,gap\n";
  for (const auto& r : rows) {
    out << r.N << ',' << fmt_double(r.t) << ',' << fmt_double(r.a) << ',' << fmt_double(r.empirical_rate) << ','
        << fmt_double(r.analytic_rate) << ',' << fmt_double(r.gap) << '\n';
  }
}

}  // namespace ldpath::poisson_walk
