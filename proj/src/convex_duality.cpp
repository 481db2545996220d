#include "ldpath/convex_duality.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ldpath {

namespace {

constexpr double kGolden = 0.6180339887498949;

struct Probe {
  std::vector<double> x;
  std::vector<double> g;  // objective slope*x - f(x), -inf where f is infinite
};

Probe probe(const ScalarFunction& f, double slope, double lo, double hi, int n) {
  Probe pr;
  pr.x.resize(n);
  pr.g.resize(n);
  std::vector<double> fv(n);
  for (int i = 0; i < n; ++i) {
    const double x = (i == n - 1) ? hi : lo + (hi - lo) * i / (n - 1);
    pr.x[i] = x;
    fv[i] = f.value(x);
    if (std::isnan(fv[i])) throw Error("NotConvex", "function evaluates to NaN at " + std::to_string(x));
    pr.g[i] = std::isfinite(fv[i]) ? slope * x - fv[i] : -kInf;
  }
  for (int i = 1; i + 1 < n; ++i) {
    if (!std::isfinite(fv[i - 1]) || !std::isfinite(fv[i]) || !std::isfinite(fv[i + 1])) continue;
    const double chord = 0.5 * (fv[i - 1] + fv[i + 1]);
    const double tol = 1e-9 * (1.0 + std::abs(fv[i - 1]) + std::abs(fv[i + 1]));
    if (fv[i] > chord + tol) {
      throw Error("NotConvex", "midpoint convexity fails near " + std::to_string(pr.x[i]));
    }
  }
  return pr;
}

double objective(const ScalarFunction& f, double slope, double x) {
  const double v = f.value(x);
  return std::isfinite(v) ? slope * x - v : -kInf;
}

// Safeguarded Newton on f'(x) = slope inside [a, b]; f' is nondecreasing.
bool newton_polish(const ScalarFunction& f, double slope, double a, double b, double& x) {
  auto phi = [&](double p) { return f.derivative(p) - slope; };
  double fa = phi(a);
  double fb = phi(b);
  if (!(fa <= 0.0 && fb >= 0.0)) return false;
  x = std::clamp(x, a, b);
  for (int it = 0; it < 100; ++it) {
    const double fx = phi(x);
    if (!std::isfinite(fx)) return false;
    if (fx == 0.0) return true;
    if (fx < 0.0) {
      a = x;
    } else {
      b = x;
    }
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    const double curv = (f.derivative(x + h) - f.derivative(x - h)) / (2.0 * h);
    double next = (curv > 0.0 && std::isfinite(curv)) ? x - fx / curv : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
      x = next;
      return true;
    }
    x = next;
    if (b - a <= 1e-15 * std::max(1.0, std::abs(x))) return true;
  }
  return true;
}

}  // namespace

ConjugateResult conjugate(const ScalarFunction& f, double slope, const ConjugateOptions& opts) {
  double lo = std::max(opts.bracket_lo, f.lo);
  double hi = std::min(opts.bracket_hi, f.hi);
  if (!(lo < hi)) throw Error("NonCoercive", "empty search bracket");
  const int n = std::max(opts.probe_points, 5);

  Probe pr;
  std::size_t best = 0;
  for (int doubling = 0;; ++doubling) {
    pr = probe(f, slope, lo, hi, n);
    best = static_cast<std::size_t>(std::max_element(pr.g.begin(), pr.g.end()) - pr.g.begin());
    if (pr.g[best] == -kInf) throw Error("NonCoercive", "function is infinite on the whole bracket");
    const bool grow_left = best == 0 && lo > f.lo;
    const bool grow_right = best + 1 == pr.x.size() && hi < f.hi;
    if (!grow_left && !grow_right) break;
    if (doubling == opts.max_doublings) {
      throw Error("NonCoercive", "objective still increasing at the bracket edge for slope " + std::to_string(slope));
    }
    const double width = hi - lo;
    if (grow_left) lo = std::max(f.lo, lo - width);
    if (grow_right) hi = std::min(f.hi, hi + width);
  }

  double a = pr.x[best == 0 ? 0 : best - 1];
  double b = pr.x[std::min(best + 1, pr.x.size() - 1)];
  const double outer_a = a;
  const double outer_b = b;

  // Golden-section maximization of the concave objective on [a, b].
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double g1 = objective(f, slope, x1);
  double g2 = objective(f, slope, x2);
  for (int it = 0; it < 300 && (b - a) > 0.1 * opts.argmax_tol; ++it) {
    if (g1 < g2) {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + kGolden * (b - a);
      g2 = objective(f, slope, x2);
    } else {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - kGolden * (b - a);
      g1 = objective(f, slope, x1);
    }
    if ((b - a) <= 4.0 * 2.2e-16 * std::max(1.0, std::abs(a))) break;
  }
  double x = g1 >= g2 ? x1 : x2;
  double value = std::max(g1, g2);
  for (double edge : {a, b, pr.x[best]}) {
    const double ge = objective(f, slope, edge);
    if (ge > value) {
      value = ge;
      x = edge;
    }
  }

  if (f.has_derivative()) {
    double xp = x;
    if (newton_polish(f, slope, outer_a, outer_b, xp)) {
      const double gp = objective(f, slope, xp);
      if (gp >= value - opts.value_tol) {
        value = std::max(value, gp);
        x = xp;
      }
    }
  }
  return {value, x};
}

double duality_gap(const ScalarFamily& hamiltonian, const ScalarFamily& lagrangian,
                   std::span<const double> states, std::span<const double> slopes,
                   const ConjugateOptions& opts) {
  double gap = 0.0;
  for (double x : states) {
    const ScalarFunction h = hamiltonian(x);
    const ScalarFunction l = lagrangian(x);
    for (double p : slopes) {
      const double direct = h(p);
      const double dual = conjugate(l, p, opts).value;
      if (direct == kInf && dual == kInf) continue;
      gap = std::max(gap, std::abs(direct - dual));
    }
  }
  return gap;
}

}  // namespace ldpath
