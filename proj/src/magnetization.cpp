#include "ldpath/magnetization.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldpath/format.hpp"
#include "ldpath/log_factorial.hpp"
#include "ldpath/parallel.hpp"
#include "ldpath/random.hpp"

namespace ldpath::magnetization {

MagPoint::MagPoint(double m) : m_(m) {
  if (!(std::abs(m) <= 1.0)) throw Error("DomainError", "magnetization must lie in [-1, 1], got " + fmt_double(m));
}

double hamiltonian(double m, double p) {
  return 0.5 * (1.0 + m) * std::expm1(-2.0 * p) + 0.5 * (1.0 - m) * std::expm1(2.0 * p);
}

double hamiltonian_dp(double m, double p) {
  return -(1.0 + m) * std::exp(-2.0 * p) + (1.0 - m) * std::exp(2.0 * p);
}

namespace {

// e^{2 p*} = (q + R) / (2(1 - m)), written to avoid cancellation for q < 0.
double exp_two_p(double m, double q) {
  const double r = std::sqrt(q * q + 4.0 * (1.0 - m * m));
  if (q >= 0.0) return (1.0 - m) > 0.0 ? (q + r) / (2.0 * (1.0 - m)) : kInf;
  return 2.0 * (1.0 + m) / (r - q);
}

}  // namespace

double lagrangian(double m, double q) {
  if (!(std::abs(m) <= 1.0) || std::isnan(q)) return kInf;
  const double r = std::sqrt(q * q + 4.0 * (1.0 - m * m));
  if (q == 0.0) return std::max(0.0, 1.0 - 0.5 * r);
  const double e = exp_two_p(m, q);
  if (e == kInf || e == 0.0) return kInf;
  return std::max(0.0, 0.5 * q * std::log(e) - 0.5 * r + 1.0);
}

double optimal_momentum(double m, double q) { return 0.5 * std::log(exp_two_p(m, q)); }

trajectory::LagrangianDerivatives lagrangian_derivatives(double m, double q) {
  const double e = exp_two_p(m, q);
  const double hpp = 2.0 * (1.0 + m) / e + 2.0 * (1.0 - m) * e;
  const double c = 0.5 * (e + 1.0 / e);
  trajectory::LagrangianDerivatives d;
  d.q = 0.5 * std::log(e);
  d.x = 0.5 * (e - 1.0 / e);
  d.qq = 1.0 / hpp;
  d.xq = 2.0 * c / hpp;
  d.xx = 4.0 * c * c / hpp;
  return d;
}

ScalarFunction hamiltonian_function(double m) {
  return {[m](double p) { return hamiltonian(m, p); }, [m](double p) { return hamiltonian_dp(m, p); }};
}

ScalarFunction lagrangian_function(double m) {
  ScalarFunction f{[m](double q) { return lagrangian(m, q); }, {}};
  if (std::abs(m) < 1.0) f.derivative = [m](double q) { return optimal_momentum(m, q); };
  return f;
}

trajectory::PhasePoint hamilton_rhs(double m, double p) {
  const double ep = std::exp(2.0 * p);
  const double em = std::exp(-2.0 * p);
  return {-m * (ep + em) + (ep - em), 0.5 * (ep - em)};
}

trajectory::Lagrangian lagrangian_model() {
  trajectory::Lagrangian lag;
  lag.value = [](double m, double q) { return lagrangian(m, q); };
  lag.derivatives = [](double m, double q) { return lagrangian_derivatives(m, q); };
  lag.drift = [](double m) { return -2.0 * m; };
  lag.state_lo = -1.0;
  lag.state_hi = 1.0;
  return lag;
}

double Extremal::operator()(double t) const { return C1 * std::exp(2.0 * t) + C2 * std::exp(-2.0 * t); }

trajectory::TrajectoryGrid Extremal::sample(int steps) const {
  return trajectory::TrajectoryGrid::sample(T, steps, [this](double t) { return (*this)(t); });
}

Extremal extremal(double m0, double mT, double T) {
  MagPoint{m0};
  MagPoint{mT};
  if (!(T > 0.0)) throw Error("InvalidParams", "time horizon must be > 0");
  const double c1 = (mT - m0 * std::exp(-2.0 * T)) / (2.0 * std::sinh(2.0 * T));
  Extremal ex{c1, m0 - c1, T};
  // The only interior critical point solves e^{4t} = C2 / C1.
  double worst = std::max(std::abs(m0), std::abs(mT));
  if (ex.C1 != 0.0 && ex.C2 / ex.C1 > 0.0) {
    const double tc = 0.25 * std::log(ex.C2 / ex.C1);
    if (tc > 0.0 && tc < T) worst = std::max(worst, std::abs(ex(tc)));
  }
  if (worst > 1.0 + 1e-12) {
    throw Error("PathLeavesDomain", "extremal through the given endpoints leaves [-1, 1]");
  }
  return ex;
}

namespace {

long integral_count(int N, double m, const char* what) {
  const double x = N * (1.0 + m) / 2.0;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, x)) {
    throw Error("InvalidParams", std::string(what) + ": N(1+m)/2 must be an integer");
  }
  return static_cast<long>(r);
}

double times_log(double count, double log_value) { return count == 0.0 ? 0.0 : count * log_value; }

}  // namespace

double exact_log_prob(int N, double m0, double T, double mT) {
  if (N < 1) throw Error("InvalidParams", "N must be >= 1");
  MagPoint{m0};
  MagPoint{mT};
  if (!(T > 0.0)) throw Error("InvalidParams", "time horizon must be > 0");
  const long n_plus = integral_count(N, m0, "m0");
  const long n_minus = N - n_plus;
  const long k = integral_count(N, mT, "mT");
  const double flip = -0.5 * std::expm1(-2.0 * T);
  const double log_flip = std::log(flip);
  const double log_keep = std::log1p(-flip);
  const LogFactorialTable& lf = LogFactorialTable::shared(static_cast<std::size_t>(N));
  // j: initially-plus spins still plus at T; k - j: initially-minus spins now plus.
  const long j_lo = std::max(0L, k - n_minus);
  const long j_hi = std::min(n_plus, k);
  double peak = -kInf;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(std::max(0L, j_hi - j_lo + 1)));
  for (long j = j_lo; j <= j_hi; ++j) {
    const long f = k - j;
    const double t = lf.log_choose(n_plus, j) + times_log(j, log_keep) + times_log(n_plus - j, log_flip) +
                     lf.log_choose(n_minus, f) + times_log(f, log_flip) + times_log(n_minus - f, log_keep);
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  if (peak == -kInf) return -kInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

double constrained_pressure(double lambda, double m, double t) {
  MagPoint{m};
  if (!(t >= 0.0)) throw Error("InvalidParams", "time must be >= 0");
  const double decay = std::exp(-2.0 * t);
  const double ch = std::cosh(lambda);
  const double sh = std::sinh(lambda);
  return 0.5 * (1.0 + m) * std::log(ch + decay * sh) + 0.5 * (1.0 - m) * std::log(ch - decay * sh);
}

MonteCarloEstimate simulate_log_moment(int N, double m, double lambda, double t, int replicas, std::uint64_t seed,
                                       int bootstrap_resamples, unsigned workers) {
  if (N < 1 || replicas < 2 || bootstrap_resamples < 2) throw Error("InvalidParams", "N, replicas, resamples too small");
  if (!(t >= 0.0)) throw Error("InvalidParams", "time must be >= 0");
  const long n_plus = integral_count(N, m, "m");
  std::vector<double> exponent(static_cast<std::size_t>(replicas));
  parallel_for(exponent.size(), workers, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    long total = 0;
    for (int i = 0; i < N; ++i) {
      int spin = i < n_plus ? 1 : -1;
      for (double clock = rng.exponential(1.0); clock < t; clock += rng.exponential(1.0)) spin = -spin;
      total += spin;
    }
    exponent[r] = lambda * static_cast<double>(total);
  });
  auto log_mean_exp = [&](auto&& pick) {
    double peak = -kInf;
    for (int i = 0; i < replicas; ++i) peak = std::max(peak, exponent[pick(i)]);
    double s = 0.0;
    for (int i = 0; i < replicas; ++i) s += std::exp(exponent[pick(i)] - peak);
    return (peak + std::log(s / replicas)) / N;
  };
  const double estimate = log_mean_exp([](int i) { return static_cast<std::size_t>(i); });
  Rng boot(derive_seed(seed, 0xb007u + static_cast<std::uint64_t>(replicas)));
  std::vector<std::size_t> draw(static_cast<std::size_t>(replicas));
  double mean = 0.0;
  double sq = 0.0;
  for (int b = 0; b < bootstrap_resamples; ++b) {
    for (auto& d : draw) d = boot.index(exponent.size());
    const double v = log_mean_exp([&](int i) { return draw[static_cast<std::size_t>(i)]; });
    mean += v;
    sq += v * v;
  }
  mean /= bootstrap_resamples;
  const double var = std::max(0.0, sq / bootstrap_resamples - mean * mean) * bootstrap_resamples /
                     (bootstrap_resamples - 1);
  return {estimate, std::sqrt(var)};
}

std::vector<RateRow> rate_table(std::span<const int> Ns, double m0, double T, double mT, double action) {
  std::vector<RateRow> rows;
  for (int n : Ns) {
    const double rate = -exact_log_prob(n, m0, T, mT) / n;
    rows.push_back({n, m0, T, mT, rate, action, std::abs(rate - action)});
  }
  return rows;
}

void write_rate_csv(std::ostream& out, std::span<const RateRow> rows) {
  out << "N,m0,T,mT,exact_rate,action,gap\n";
  for (const auto& r : rows) {
    out << r.N << ',' << fmt_double(r.m0) << ',' << fmt_double(r.T) << ',' << fmt_double(r.mT) << ','
        << fmt_double(r.exact_rate) << ',' << fmt_double(r.action) << ',' << fmt_double(r.gap) << '\n';
  }
}

}  // namespace ldpath::magnetization
