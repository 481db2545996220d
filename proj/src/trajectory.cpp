#include "ldpath/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "ldpath/format.hpp"
#include "ldpath/parallel.hpp"
#include "ldpath/random.hpp"

namespace ldpath::trajectory {

LagrangianDerivatives Lagrangian::derivs(double x, double q) const {
  if (derivatives) return derivatives(x, q);
  const double hx = 1e-5 * std::max(1.0, std::abs(x));
  const double hq = 1e-5 * std::max(1.0, std::abs(q));
  const double f0 = value(x, q);
  const double fxp = value(x + hx, q);
  const double fxm = value(x - hx, q);
  const double fqp = value(x, q + hq);
  const double fqm = value(x, q - hq);
  LagrangianDerivatives d;
  d.x = (fxp - fxm) / (2.0 * hx);
  d.q = (fqp - fqm) / (2.0 * hq);
  d.xx = (fxp - 2.0 * f0 + fxm) / (hx * hx);
  d.qq = (fqp - 2.0 * f0 + fqm) / (hq * hq);
  d.xq = (value(x + hx, q + hq) - value(x + hx, q - hq) - value(x - hx, q + hq) + value(x - hx, q - hq)) /
         (4.0 * hx * hq);
  return d;
}

TrajectoryGrid::TrajectoryGrid(double horizon, std::vector<double> samples) : T(horizon), values(std::move(samples)) {
  if (!(T > 0.0)) throw Error("InvalidTrajectory", "horizon must be > 0");
  if (values.size() < 2) throw Error("InvalidTrajectory", "need at least one time step");
}

TrajectoryGrid TrajectoryGrid::sample(double horizon, int steps, const std::function<double(double)>& path) {
  if (steps < 1) throw Error("InvalidTrajectory", "steps must be positive");
  std::vector<double> v(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) v[static_cast<std::size_t>(i)] = path(horizon * i / steps);
  return {horizon, std::move(v)};
}

double action_integral(const Lagrangian& lagrangian, const TrajectoryGrid& traj) {
  const double dt = traj.dt();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < traj.values.size(); ++i) {
    const double x = 0.5 * (traj.values[i] + traj.values[i + 1]);
    const double q = (traj.values[i + 1] - traj.values[i]) / dt;
    const double l = lagrangian(x, q);
    if (!(l < kInf)) return kInf;
    total += dt * l;
  }
  return total;
}

namespace {

// Objective, gradient and tridiagonal Hessian of
//   [initial_cost(x_0)] + sum_i dt L(mid_i, v_i)
// over all nodes; callers restrict to the free block.
struct Assembly {
  double value = 0.0;
  std::vector<double> grad;
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples node i and i+1
};

struct Problem {
  const Lagrangian& lagrangian;
  const ScalarFunction* initial_cost;  // null for a fixed start
  double dt;
  std::size_t first_free;
  std::size_t last_free;  // inclusive

  double initial_second_derivative(double x0) const {
    const double h = 1e-6 * std::max(1.0, std::abs(x0));
    if (initial_cost->has_derivative()) {
      return (initial_cost->derivative(x0 + h) - initial_cost->derivative(x0 - h)) / (2.0 * h);
    }
    const double h2 = 1e-4 * std::max(1.0, std::abs(x0));
    return ((*initial_cost)(x0 + h2) - 2.0 * (*initial_cost)(x0) + (*initial_cost)(x0 - h2)) / (h2 * h2);
  }

  double initial_derivative(double x0) const {
    if (initial_cost->has_derivative()) return initial_cost->derivative(x0);
    const double h = 1e-6 * std::max(1.0, std::abs(x0));
    return ((*initial_cost)(x0 + h) - (*initial_cost)(x0 - h)) / (2.0 * h);
  }

  double value(const std::vector<double>& x) const {
    double total = 0.0;
    if (initial_cost) {
      const double c = (*initial_cost)(x[0]);
      if (!(c < kInf)) return kInf;
      total += c;
    }
    for (std::size_t i = first_free; i <= last_free; ++i) {
      if (!lagrangian.admissible(x[i])) return kInf;
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double l = lagrangian(0.5 * (x[i] + x[i + 1]), (x[i + 1] - x[i]) / dt);
      if (!(l < kInf) || std::isnan(l)) return kInf;
      total += dt * l;
    }
    return total;
  }

  bool assemble(const std::vector<double>& x, Assembly& a) const {
    const std::size_t n = x.size();
    a.grad.assign(n, 0.0);
    a.diag.assign(n, 0.0);
    a.off.assign(n - 1, 0.0);
    a.value = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double mid = 0.5 * (x[i] + x[i + 1]);
      const double vel = (x[i + 1] - x[i]) / dt;
      const double l = lagrangian(mid, vel);
      if (!(l < kInf)) return false;
      const LagrangianDerivatives d = lagrangian.derivs(mid, vel);
      a.value += dt * l;
      a.grad[i] += 0.5 * dt * d.x - d.q;
      a.grad[i + 1] += 0.5 * dt * d.x + d.q;
      a.diag[i] += 0.25 * dt * d.xx - d.xq + d.qq / dt;
      a.diag[i + 1] += 0.25 * dt * d.xx + d.xq + d.qq / dt;
      a.off[i] += 0.25 * dt * d.xx - d.qq / dt;
    }
    if (initial_cost) {
      const double c = (*initial_cost)(x[0]);
      if (!(c < kInf)) return false;
      a.value += c;
      a.grad[0] += initial_derivative(x[0]);
      a.diag[0] += initial_second_derivative(x[0]);
    }
    for (std::size_t i = first_free; i <= last_free; ++i) {
      if (!std::isfinite(a.grad[i]) || !std::isfinite(a.diag[i])) return false;
    }
    return true;
  }
};

// Solves (H + shift I) step = -grad on the free block by LDL^T elimination.
// Returns false unless every pivot is positive.
bool solve_tridiagonal(const Assembly& a, std::size_t first, std::size_t last, double shift,
                       std::vector<double>& step) {
  const std::size_t m = last - first + 1;
  std::vector<double> pivot(m);
  std::vector<double> rhs(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = first + k;
    double d = a.diag[i] + shift;
    double r = -a.grad[i];
    if (k > 0) {
      const double l = a.off[i - 1] / pivot[k - 1];
      d -= l * a.off[i - 1];
      r -= l * rhs[k - 1];
    }
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    pivot[k] = d;
    rhs[k] = r;
  }
  step.assign(m, 0.0);
  for (std::size_t k = m; k-- > 0;) {
    const std::size_t i = first + k;
    double r = rhs[k];
    if (k + 1 < m) r -= a.off[i] * step[k + 1];
    step[k] = r / pivot[k];
  }
  return true;
}

struct Relaxed {
  std::vector<double> x;
  double value = kInf;
  double gradient_norm = kInf;
  bool local_minimum = false;
};

Relaxed relax(const Problem& prob, std::vector<double> x, const SolverOptions& opts) {
  Relaxed out;
  Assembly a;
  if (!prob.assemble(x, a)) return out;
  double shift = 0.0;
  std::vector<double> step;
  std::vector<double> trial;
  for (int it = 0; it < opts.max_iterations; ++it) {
    double gnorm = 0.0;
    double scale = 0.0;
    for (std::size_t i = prob.first_free; i <= prob.last_free; ++i) {
      gnorm = std::max(gnorm, std::abs(a.grad[i]));
      scale = std::max(scale, std::abs(a.diag[i]));
    }
    if (gnorm < opts.gradient_tol) break;
    bool moved = false;
    for (int attempt = 0; attempt < 60 && !moved; ++attempt) {
      if (!solve_tridiagonal(a, prob.first_free, prob.last_free, shift, step)) {
        shift = std::max(1e-10 * std::max(scale, 1.0), 10.0 * shift);
        continue;
      }
      double slope = 0.0;
      for (std::size_t k = 0; k < step.size(); ++k) slope += a.grad[prob.first_free + k] * step[k];
      double alpha = 1.0;
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        trial = x;
        for (std::size_t k = 0; k < step.size(); ++k) trial[prob.first_free + k] += alpha * step[k];
        const double v = prob.value(trial);
        if (v < kInf && v <= a.value + 1e-4 * alpha * slope + 1e-15 * std::abs(a.value)) {
          Assembly next;
          if (!prob.assemble(trial, next)) continue;
          x.swap(trial);
          a = std::move(next);
          moved = true;
          break;
        }
      }
      if (moved) {
        if (alpha == 1.0) shift *= 0.1;
        if (shift < 1e-14 * std::max(scale, 1.0)) shift = 0.0;
      } else {
        shift = std::max(1e-8 * std::max(scale, 1.0), 10.0 * shift);
      }
    }
    if (!moved) break;
    double step_norm = 0.0;
    for (double s : step) step_norm = std::max(step_norm, std::abs(s));
    if (step_norm < 1e-15) break;
  }
  out.value = a.value;
  out.gradient_norm = 0.0;
  for (std::size_t i = prob.first_free; i <= prob.last_free; ++i) {
    out.gradient_norm = std::max(out.gradient_norm, std::abs(a.grad[i]));
  }
  out.local_minimum = solve_tridiagonal(a, prob.first_free, prob.last_free, 0.0, step);
  out.x = std::move(x);
  return out;
}

double clamp_inside(const Lagrangian& lag, double v) {
  if (std::isfinite(lag.state_lo) && std::isfinite(lag.state_hi)) {
    const double margin = 1e-6 * (lag.state_hi - lag.state_lo);
    return std::clamp(v, lag.state_lo + margin, lag.state_hi - margin);
  }
  if (std::isfinite(lag.state_lo)) return std::max(v, lag.state_lo + 1e-9 * std::max(1.0, std::abs(lag.state_lo)));
  if (std::isfinite(lag.state_hi)) return std::min(v, lag.state_hi - 1e-9 * std::max(1.0, std::abs(lag.state_hi)));
  return v;
}

// Integrates x' = drift(x) with RK4 substeps over duration h (negative h runs
// backwards).
double follow_drift(const std::function<double(double)>& drift, double x, double h) {
  const int sub = 8;
  const double dh = h / sub;
  for (int s = 0; s < sub; ++s) {
    const double k1 = drift(x);
    const double k2 = drift(x + 0.5 * dh * k1);
    const double k3 = drift(x + 0.5 * dh * k2);
    const double k4 = drift(x + dh * k3);
    x += dh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(x)) return x;
  }
  return x;
}

std::vector<double> linear_profile(double a, double b, int steps) {
  std::vector<double> v(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / steps;
  return v;
}

std::vector<double> drift_then_jump(const Lagrangian& lag, double a, double b, double T, int steps) {
  std::vector<double> v(static_cast<std::size_t>(steps) + 1);
  const int switch_at = std::max(0, static_cast<int>(0.9 * steps));
  const double dt = T / steps;
  v[0] = a;
  for (int i = 1; i <= switch_at; ++i) {
    v[static_cast<std::size_t>(i)] = clamp_inside(lag, follow_drift(lag.drift, v[static_cast<std::size_t>(i) - 1], dt));
  }
  const double from = v[static_cast<std::size_t>(switch_at)];
  for (int i = switch_at + 1; i <= steps; ++i) {
    v[static_cast<std::size_t>(i)] = from + (b - from) * (i - switch_at) / (steps - switch_at);
  }
  return v;
}

std::vector<double> jump_then_drift(const Lagrangian& lag, double a, double b, double T, int steps) {
  std::vector<double> v(static_cast<std::size_t>(steps) + 1);
  const int switch_at = std::min(steps, std::max(1, static_cast<int>(0.1 * steps)));
  const double dt = T / steps;
  v[static_cast<std::size_t>(steps)] = b;
  for (int i = steps - 1; i >= switch_at; --i) {
    v[static_cast<std::size_t>(i)] = clamp_inside(lag, follow_drift(lag.drift, v[static_cast<std::size_t>(i) + 1], -dt));
  }
  const double to = v[static_cast<std::size_t>(switch_at)];
  for (int i = 0; i < switch_at; ++i) v[static_cast<std::size_t>(i)] = a + (to - a) * i / switch_at;
  return v;
}

std::vector<std::vector<double>> fixed_starts(const Lagrangian& lag, double a, double b, double T,
                                              const SolverOptions& opts) {
  const int steps = opts.steps;
  std::vector<std::vector<double>> starts;
  starts.push_back(linear_profile(a, b, steps));
  if (lag.drift) {
    starts.push_back(drift_then_jump(lag, a, b, T, steps));
    starts.push_back(jump_then_drift(lag, a, b, T, steps));
  }
  double amplitude = 0.25 * std::max(std::abs(b - a), 0.1);
  if (std::isfinite(lag.state_lo) && std::isfinite(lag.state_hi)) {
    amplitude = std::min(amplitude, 0.25 * (lag.state_hi - lag.state_lo));
  }
  for (int r = 0; r < opts.jitter_restarts; ++r) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
    double coef[3];
    for (double& c : coef) c = amplitude * (2.0 * rng.uniform() - 1.0);
    std::vector<double> v = linear_profile(a, b, steps);
    for (int i = 1; i < steps; ++i) {
      const double s = static_cast<double>(i) / steps;
      double bump = 0.0;
      for (int k = 0; k < 3; ++k) bump += coef[k] * std::sin((k + 1) * 3.14159265358979323846 * s);
      v[static_cast<std::size_t>(i)] = clamp_inside(lag, v[static_cast<std::size_t>(i)] + bump);
    }
    starts.push_back(std::move(v));
  }
  for (const auto& extra : opts.extra_starts) {
    if (extra.steps() != steps) {
      starts.push_back(TrajectoryGrid::sample(T, steps, [&](double t) {
                         const double pos = t / extra.T * extra.steps();
                         const auto i = std::min(static_cast<std::size_t>(pos), extra.values.size() - 2);
                         const double w = pos - static_cast<double>(i);
                         return (1.0 - w) * extra.values[i] + w * extra.values[i + 1];
                       }).values);
    } else {
      starts.push_back(extra.values);
    }
    starts.back().front() = a;
    starts.back().back() = b;
  }
  return starts;
}

}  // namespace

FixedResult minimize_action_fixed(const Lagrangian& lagrangian, double start, double end, double T,
                                  const SolverOptions& opts) {
  if (!(T > 0.0)) throw Error("InvalidParams", "time horizon must be > 0");
  if (opts.steps < 2) throw Error("InvalidParams", "need at least two time steps");
  const auto starts = fixed_starts(lagrangian, start, end, T, opts);
  const Problem prob{lagrangian, nullptr, T / opts.steps, 1, static_cast<std::size_t>(opts.steps) - 1};
  std::vector<Relaxed> results(starts.size());
  parallel_for(starts.size(), opts.workers, [&](std::size_t i) { results[i] = relax(prob, starts[i], opts); });
  std::size_t best = results.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!(results[i].value < kInf)) continue;
    if (best == results.size() || results[i].value < results[best].value) best = i;
  }
  if (best == results.size()) throw Error("NoFeasiblePath", "every candidate path has infinite action");
  return {TrajectoryGrid(T, results[best].x), results[best].value};
}

const OpenStartMinimizer& OpenStartResult::best() const {
  if (minimizers.empty()) throw Error("NoFeasiblePath", "no minimizer found");
  return *std::min_element(minimizers.begin(), minimizers.end(),
                           [](const auto& a, const auto& b) { return a.value < b.value; });
}

OpenStartResult minimize_action_open_start(const Lagrangian& lagrangian, const ScalarFunction& initial_cost,
                                           double end, double T, const OpenStartOptions& opts) {
  if (!(T > 0.0)) throw Error("InvalidParams", "time horizon must be > 0");
  const int steps = opts.solver.steps;
  if (steps < 2) throw Error("InvalidParams", "need at least two time steps");
  double lo = std::max(initial_cost.lo, lagrangian.state_lo);
  double hi = std::min(initial_cost.hi, lagrangian.state_hi);
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    const double span = 4.0 * std::max(1.0, std::abs(end));
    lo = std::isfinite(lo) ? lo : end - span;
    hi = std::isfinite(hi) ? hi : end + span;
  }
  const int n_init = std::max(1, opts.initial_points);
  std::vector<std::vector<double>> starts;
  for (int k = 0; k < n_init; ++k) {
    const double g0 = clamp_inside(lagrangian, lo + (hi - lo) * (k + 0.5) / n_init);
    if (!(initial_cost(g0) < kInf)) continue;
    starts.push_back(linear_profile(g0, end, steps));
    if (lagrangian.drift) starts.push_back(drift_then_jump(lagrangian, g0, end, T, steps));
  }
  if (starts.empty()) throw Error("NoFeasiblePath", "initial cost is infinite at every start");

  const double dt = T / steps;
  const Problem prob{lagrangian, &initial_cost, dt, 0, static_cast<std::size_t>(steps) - 1};
  std::vector<Relaxed> results(starts.size());
  parallel_for(starts.size(), opts.solver.workers,
               [&](std::size_t i) { results[i] = relax(prob, starts[i], opts.solver); });

  std::vector<std::size_t> order;
  bool any_minimum = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].value < kInf) {
      order.push_back(i);
      any_minimum = any_minimum || results[i].local_minimum;
    }
  }
  if (order.empty()) throw Error("NoFeasiblePath", "every candidate path has infinite cost");
  if (any_minimum) {
    std::erase_if(order, [&](std::size_t i) { return !results[i].local_minimum; });
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return results[a].value < results[b].value; });

  auto make = [&](const Relaxed& r) {
    OpenStartMinimizer m;
    m.path = TrajectoryGrid(T, r.x);
    m.value = r.value;
    m.gamma0 = r.x[0];
    const auto d = lagrangian.derivs(0.5 * (r.x[0] + r.x[1]), (r.x[1] - r.x[0]) / dt);
    const double p0 = d.q - 0.5 * dt * d.x;
    m.transversality_residual = std::abs(p0 - prob.initial_derivative(r.x[0]));
    return m;
  };

  OpenStartResult out;
  for (std::size_t idx : order) {
    const Relaxed& r = results[idx];
    const bool seen = std::any_of(out.local_minima.begin(), out.local_minima.end(), [&](const auto& m) {
      return std::abs(m.gamma0 - r.x[0]) <= opts.cluster_gamma_tol;
    });
    if (!seen) out.local_minima.push_back(make(r));
  }
  out.best_value = out.local_minima.front().value;
  for (const auto& m : out.local_minima) {
    if (m.value <= out.best_value + opts.cluster_value_tol) out.minimizers.push_back(m);
  }
  auto by_gamma = [](const auto& a, const auto& b) { return a.gamma0 < b.gamma0; };
  std::sort(out.minimizers.begin(), out.minimizers.end(), by_gamma);
  std::sort(out.local_minima.begin(), out.local_minima.end(), by_gamma);
  return out;
}

double euler_lagrange_residual(const Lagrangian& lagrangian, const TrajectoryGrid& traj) {
  const double dt = traj.dt();
  const auto& x = traj.values;
  const std::size_t n = x.size();
  std::vector<LagrangianDerivatives> mid(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    mid[i] = lagrangian.derivs(0.5 * (x[i] + x[i + 1]), (x[i + 1] - x[i]) / dt);
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dp = (mid[i].q - mid[i - 1].q) / dt;
    const double force = 0.5 * (mid[i].x + mid[i - 1].x);
    const double r = std::abs(dp - force);
    worst = std::isnan(r) ? kInf : std::max(worst, r);
  }
  return worst;
}

FlowPath hamilton_flow_integrate(const HamiltonRhs& rhs, const Hamiltonian& energy, double m0, double p0, double T,
                                 double dt, double state_lo, double state_hi) {
  if (!(T > 0.0) || !(dt > 0.0)) throw Error("InvalidParams", "T and dt must be > 0");
  if (dt > T / 100.0 * (1.0 + 1e-12)) throw Error("InvalidParams", "dt must be at most T/100");
  const auto n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  const double h = T / static_cast<double>(n);
  FlowPath out;
  out.t.reserve(n + 1);
  out.m.reserve(n + 1);
  out.p.reserve(n + 1);
  double m = m0;
  double p = p0;
  const double e0 = energy(m0, p0);
  out.t.push_back(0.0);
  out.m.push_back(m);
  out.p.push_back(p);
  for (std::size_t k = 1; k <= n; ++k) {
    const PhasePoint k1 = rhs(m, p);
    const PhasePoint k2 = rhs(m + 0.5 * h * k1.m, p + 0.5 * h * k1.p);
    const PhasePoint k3 = rhs(m + 0.5 * h * k2.m, p + 0.5 * h * k2.p);
    const PhasePoint k4 = rhs(m + h * k3.m, p + h * k3.p);
    m += h / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    p += h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    if (!(m >= state_lo && m <= state_hi)) {
      throw Error("DomainExit", "state left the admissible interval at t = " + fmt_double(h * static_cast<double>(k)));
    }
    out.t.push_back(h * static_cast<double>(k));
    out.m.push_back(m);
    out.p.push_back(p);
    out.max_energy_drift = std::max(out.max_energy_drift, std::abs(energy(m, p) - e0));
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryGrid& traj) {
  out << "t,value\n";
  for (int i = 0; i <= traj.steps(); ++i) {
    out << fmt_double(traj.time(i)) << ',' << fmt_double(traj.values[static_cast<std::size_t>(i)]) << '\n';
  }
}

}  // namespace ldpath::trajectory
