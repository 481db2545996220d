#include "ldpath/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldpath/badness.hpp"
#include "ldpath/convex_duality.hpp"
#include "ldpath/error.hpp"
#include "ldpath/finite_jump.hpp"
#include "ldpath/format.hpp"
#include "ldpath/lattice.hpp"
#include "ldpath/magnetization.hpp"
#include "ldpath/poisson_walk.hpp"
#include "ldpath/random.hpp"
#include "ldpath/trajectory.hpp"

namespace ldpath::criteria {

namespace {

namespace mag = magnetization;
namespace fj = finite_jump;
namespace lat = lattice;
namespace traj = trajectory;

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return g;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g = grid(std::log(lo), std::log(hi), n);
  for (double& x : g) x = std::exp(x);
  g.front() = lo;
  g.back() = hi;
  return g;
}

// Appends a measurement and returns whether value <= bound.
bool at_most(CriterionResult& r, const std::string& name, double value, double bound) {
  r.measurements.push_back({name, value, bound});
  return value <= bound;
}

bool at_least(CriterionResult& r, const std::string& name, double value, double bound) {
  r.measurements.push_back({name, value, bound});
  return value >= bound;
}

CriterionResult conjugate_pair_duality(const VerifyOptions&) {
  CriterionResult r{1, "conjugate-pair duality (magnetization H and L)", false, {}, {}};
  const auto ms = grid(-0.9, 0.9, 19);
  const auto slopes = grid(-4.0, 4.0, 81);
  // Maximizers of the forward direction reach |q| ~ e^8.
  ConjugateOptions wide;
  wide.bracket_lo = -2000.0;
  wide.bracket_hi = 2000.0;
  const double forward = duality_gap(mag::hamiltonian_function, mag::lagrangian_function, ms, slopes, wide);
  const double reverse = duality_gap(mag::lagrangian_function, mag::hamiltonian_function, ms, slopes, wide);
  const bool a = at_most(r, "max |H - L*|", forward, 1e-8);
  const bool b = at_most(r, "max |L - H*|", reverse, 1e-8);
  r.pass = a && b;
  return r;
}

CriterionResult zero_cost_drift(const VerifyOptions& opts) {
  CriterionResult r{2, "zero-cost drift", false, {}, {}};
  Rng rng(derive_seed(opts.seed, 2));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double m = -0.999 + 1.998 * rng.uniform();
    worst = std::max(worst, std::abs(mag::lagrangian(m, -2.0 * m)));
  }
  const auto model = mag::lagrangian_model();
  double action = 0.0;
  for (double m0 : {-0.9, -0.5, 0.5, 0.9}) {
    const auto path = traj::TrajectoryGrid::sample(1.0, 2000, [m0](double t) { return m0 * std::exp(-2.0 * t); });
    action = std::max(action, std::abs(traj::action_integral(model, path)));
  }
  const bool a = at_most(r, "max |L(m, -2m)|", worst, 1e-10);
  const bool b = at_most(r, "max action of m0 exp(-2t)", action, 1e-8);
  r.pass = a && b;
  return r;
}

CriterionResult poisson_walk_ldp(const VerifyOptions&) {
  CriterionResult r{3, "Poisson-walk LDP against the exact oracle", false, {}, {}};
  const std::vector<int> Ns{50, 100, 200, 500};
  bool ok = true;
  for (double a : {0.0, 0.5, 1.0, 2.0}) {
    const auto rows = poisson_walk::rate_convergence(2.0, 1.0, Ns, 1.0, a);
    const double first = std::abs(rows.front().gap);
    const double last = std::abs(rows.back().gap);
    ok &= at_most(r, "a=" + fmt_double(a) + " gap at N=500", last, 0.05);
    ok &= at_most(r, "a=" + fmt_double(a) + " gap(500) - gap(50)", last - first, -1e-12);
  }
  r.pass = ok;
  return r;
}

CriterionResult magnetization_ldp(const VerifyOptions& opts) {
  CriterionResult r{4, "magnetization LDP against the minimized action", false, {}, {}};
  const double m0 = 0.5, T = 0.5, mT = 0.0;
  const auto model = mag::lagrangian_model();
  traj::SolverOptions so;
  so.steps = 400;
  so.seed = derive_seed(opts.seed, 4);
  so.workers = opts.workers;
  const auto fixed = traj::minimize_action_fixed(model, m0, mT, T, so);
  const auto ext = mag::extremal(m0, mT, T);
  const double ext_action = traj::action_integral(model, ext.sample(so.steps));
  const double rate = -mag::exact_log_prob(2000, m0, T, mT) / 2000.0;
  const bool a = at_most(r, "|-(1/N) log P - action| at N=2000", std::abs(rate - fixed.value), 0.05);
  const bool b = at_most(r, "|extremal action - minimized action|", std::abs(ext_action - fixed.value), 1e-4);
  r.pass = a && b;
  return r;
}

CriterionResult generator_identity(const VerifyOptions& opts) {
  CriterionResult r{5, "exact non-linear generator identity on random instances", false, {}, {}};
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const bool two_d = i >= 100;
    const int dim = two_d ? 2 : 1;
    const lat::Torus torus(dim, two_d ? 4 : 10);
    const std::uint64_t s = derive_seed(opts.seed, 5000 + static_cast<std::uint64_t>(i));
    Rng rng(s);
    const auto rates = lat::LocalRateSpec::random(dim, 1, 0.2, 5.0, rng.bits());
    const auto f = lat::random_coefficient_map(dim, 3, 3, 2, rng.bits());
    const auto config = lat::SpinConfiguration::random(torus, 2.0 * rng.uniform() - 1.0, rng.bits());
    const auto pair = lat::nonlinear_generator_exact(config, f, rates);
    worst = std::max(worst, std::abs(pair.lhs - pair.rhs));
  }
  r.pass = at_most(r, "max |lhs - rhs|", worst, 1e-12);
  return r;
}

CriterionResult finite_size_scaling(const VerifyOptions&) {
  CriterionResult r{6, "finite-size scaling of the general non-linear generator", false, {}, {}};
  const lat::SmoothFunction psi{[](std::span<const double> x) { return x[0] * x[0]; },
                                [](std::span<const double> x) { return std::vector<double>{2.0 * x[0]}; }};
  const std::vector<lat::CoefficientMap> fs{lat::CoefficientMap::single({{0, 0}})};
  const auto rates = lat::LocalRateSpec::constant(1);
  std::vector<double> lx, ly;
  for (int side : {11, 21, 41}) {
    const lat::Torus torus(1, (side - 1) / 2);
    const auto config = lat::SpinConfiguration::constant(torus, 1);
    const auto pair = lat::nonlinear_generator_general(config, psi, fs, rates);
    const double err = std::abs(pair.finite - pair.limit);
    r.measurements.push_back({"|finite - limit| at side " + std::to_string(side), err, 0.0});
    lx.push_back(std::log(static_cast<double>(torus.volume())));
    ly.push_back(std::log(err));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3.0;
  const double my = (ly[0] + ly[1] + ly[2]) / 3.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  r.pass = at_most(r, "|slope + 1|", std::abs(slope + 1.0), 0.2);
  r.note = "slope " + fmt_double(slope);
  return r;
}

CriterionResult finite_strong_duality(const VerifyOptions& opts) {
  CriterionResult r{7, "finite-dimensional strong duality and the closed-form gap", false, {}, {}};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(opts.seed, 7000 + static_cast<std::uint64_t>(i)));
    const int n = 2 + static_cast<int>(rng.index(5));
    fj::JumpModel model;
    model.D = fj::MatrixXd::Zero(n, n);
    model.c.resize(n);
    model.mu.resize(n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (a != b) model.D(a, b) = 4.0 * rng.uniform() - 2.0;
      }
      model.D(a, a) = -model.D.row(a).sum();
      model.c(a) = 0.5 + 1.5 * rng.uniform();
      model.mu(a) = 0.1 + rng.uniform();
    }
    model.mu /= model.mu.sum();
    fj::VectorXd nu0(n);
    for (int a = 0; a < n; ++a) nu0(a) = 0.1 + rng.uniform();
    const fj::VectorXd alpha = model.D.transpose() * nu0;
    const double v = fj::lagrangian_variational(model, alpha);
    const double d = fj::lagrangian_dual(model, alpha).value;
    worst = std::max(worst, std::abs(v - d));
  }
  bool ok = at_most(r, "max |variational - dual| over 100 models", worst, 1e-7);

  fj::JumpModel two;
  two.D = fj::MatrixXd{{-2.0, 2.0}, {2.0, -2.0}};
  two.c = fj::VectorXd::Ones(2);
  two.mu = fj::VectorXd{{0.75, 0.25}};
  const fj::VectorXd zero = fj::VectorXd::Zero(2);
  const double variational = fj::lagrangian_variational(two, zero);
  const double closed = fj::closed_form_lagrangian(two, zero);
  r.measurements.push_back({"two-state variational", variational, 0.0});
  r.measurements.push_back({"two-state closed form", closed, 0.0});
  ok &= at_least(r, "closed form - variational", closed - variational, 0.009);
  ok &= at_most(r, "|variational - mag L(0.5, 0)|", std::abs(variational - mag::lagrangian(0.5, 0.0)), 1e-8);
  r.pass = ok;
  return r;
}

CriterionResult hamilton_flow(const VerifyOptions&) {
  CriterionResult r{8, "Hamilton flow invariants", false, {}, {}};
  const double dt = 1e-4;
  const double m0 = 0.3, p0 = 0.1;
  const auto flow = traj::hamilton_flow_integrate(mag::hamilton_rhs, mag::hamiltonian, m0, p0, 1.0, dt);
  double growth = 0.0;
  for (std::size_t i = 0; i < flow.t.size(); ++i) {
    growth = std::max(growth, std::abs(std::tanh(flow.p[i]) / std::tanh(p0) - std::exp(2.0 * flow.t[i])));
  }
  const auto rest = traj::hamilton_flow_integrate(mag::hamilton_rhs, mag::hamiltonian, m0, 0.0, 1.0, dt);
  double drift_path = 0.0;
  for (std::size_t i = 0; i < rest.t.size(); ++i) {
    drift_path = std::max(drift_path, std::abs(rest.m[i] - m0 * std::exp(-2.0 * rest.t[i])));
    drift_path = std::max(drift_path, std::abs(rest.p[i]));
  }
  const bool a = at_most(r, "energy drift", flow.max_energy_drift, 1e-8);
  const bool b = at_most(r, "|tanh p / tanh p0 - e^{2t}|", growth, 1e-6);
  const bool c = at_most(r, "|m - m0 e^{-2t}| with p0 = 0", drift_path, 1e-8);
  r.pass = a && b && c;
  return r;
}

CriterionResult pressure_derivative(const VerifyOptions& opts) {
  CriterionResult r{9, "constrained-pressure time derivative and Monte Carlo", false, {}, {}};
  // One-sided second-order stencil; the third time derivative reaches ~e^12
  // at |lambda| = 2, so the step must be small.
  const double h = 1e-6;
  double worst = 0.0;
  for (double lambda : grid(-2.0, 2.0, 17)) {
    for (double m : grid(-0.9, 0.9, 19)) {
      const double f0 = mag::constrained_pressure(lambda, m, 0.0);
      const double f1 = mag::constrained_pressure(lambda, m, h);
      const double f2 = mag::constrained_pressure(lambda, m, 2.0 * h);
      const double derivative = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
      worst = std::max(worst, std::abs(derivative - mag::hamiltonian(m, lambda)));
    }
  }
  bool ok = at_most(r, "max |d/dt p_t - H| at t=0", worst, 1e-6);
  const double lambda = 0.1, m = 0.5, t = 0.5;
  const auto mc = mag::simulate_log_moment(200, m, lambda, t, 10000, derive_seed(opts.seed, 9), 400, opts.workers);
  const double exact = mag::constrained_pressure(lambda, m, t);
  r.measurements.push_back({"Monte Carlo estimate", mc.value, exact});
  ok &= at_most(r, "|MC - closed form| / SE", std::abs(mc.value - exact) / mc.standard_error, 3.0);
  r.pass = ok;
  return r;
}

CriterionResult badness_phase(const VerifyOptions& opts) {
  CriterionResult r{10, "badness phase behavior", false, {}, {}};
  const auto well = badness::RateFunctionSpec::double_well(1.5);
  badness::BadnessOptions bo;
  bo.open.solver.seed = derive_seed(opts.seed, 10);

  const auto Ts = log_grid(0.05, 3.0, 40);
  const std::vector<double> zero{0.0};
  const auto column = badness::badness_scan(well, Ts, zero, bo, derive_seed(opts.seed, 11), opts.workers);
  int up = 0, down = 0;
  for (std::size_t i = 0; i < column.cells.size(); ++i) {
    if (!column.cells[i].error.empty()) r.note += "cell error: " + column.cells[i].error + "; ";
    if (i == 0) continue;
    const bool prev = column.cells[i - 1].bad, cur = column.cells[i].bad;
    up += !prev && cur;
    down += prev && !cur;
  }
  bool ok = at_most(r, "bad at T=0.05", column.cells.front().bad ? 1.0 : 0.0, 0.0);
  ok &= at_least(r, "bad at T=3", column.cells.back().bad ? 1.0 : 0.0, 1.0);
  ok &= at_most(r, "|false->true crossovers - 1|", std::abs(up - 1.0), 0.0);
  ok &= at_most(r, "true->false crossovers", down, 0.0);
  for (std::size_t i = 1; i < column.cells.size(); ++i) {
    if (column.cells[i].bad && !column.cells[i - 1].bad) r.note += "crossover at T=" + fmt_double(Ts[i]) + "; ";
  }

  const auto verdict = badness::is_bad(well, 0.0, 3.0, bo);
  double sign_product = 0.0;
  if (!verdict.plus_branch.empty() && !verdict.minus_branch.empty()) {
    sign_product = verdict.plus_branch.back() * verdict.minus_branch.back();
  }
  ok &= at_most(r, "plus-branch gamma0 * minus-branch gamma0", sign_product, -1e-6);

  const auto bern = badness::RateFunctionSpec::bernoulli(0.5);
  const auto scan = badness::badness_scan(bern, log_grid(0.05, 3.0, 20), grid(-0.9, 0.9, 20), bo,
                                          derive_seed(opts.seed, 12), opts.workers);
  int bad = 0, errors = 0;
  for (const auto& cell : scan.cells) {
    bad += cell.bad;
    errors += !cell.error.empty();
  }
  ok &= at_most(r, "bad cells in the Bernoulli scan", bad, 0.0);
  ok &= at_most(r, "failed cells in the Bernoulli scan", errors, 0.0);
  r.pass = ok;
  return r;
}

CriterionResult lattice_lln(const VerifyOptions& opts) {
  CriterionResult r{11, "lattice moment decay under independent flips", false, {}, {}};
  const lat::Torus torus(1, 50);
  const auto start = lat::SpinConfiguration::constant(torus, 1);
  const std::vector<lat::BasisSet> observables{{{0, 0}}, {{0, 0}, {1, 0}}};
  const std::vector<double> times{0.1, 0.5, 1.0};
  const auto rows = lat::simulate_moments(start, lat::LocalRateSpec::constant(1), observables, times, 50,
                                          derive_seed(opts.seed, 11), opts.workers);
  bool ok = true;
  for (const auto& row : rows) {
    const double size = static_cast<double>(observables[row.observable].size());
    const double expected = std::exp(-2.0 * size * row.t);
    ok &= at_most(r, "|A|=" + fmt_double(size) + " t=" + fmt_double(row.t) + " |mean - exp| / SE",
                  std::abs(row.mean - expected) / row.standard_error, 3.0);
  }
  r.pass = ok;
  return r;
}

}  // namespace

CriterionResult run(int id, const VerifyOptions& opts) {
  using Check = CriterionResult (*)(const VerifyOptions&);
  static constexpr Check checks[kCount] = {conjugate_pair_duality, zero_cost_drift,       poisson_walk_ldp,
                                           magnetization_ldp,      generator_identity,    finite_size_scaling,
                                           finite_strong_duality,  hamilton_flow,         pressure_derivative,
                                           badness_phase,          lattice_lln};
  if (id < 1 || id > kCount) throw Error("InvalidParams", "unknown criterion " + std::to_string(id));
  try {
    return checks[id - 1](opts);
  } catch (const Error& e) {
    CriterionResult r;
    r.id = id;
    r.title = "criterion " + std::to_string(id);
    r.note = e.kind() + ": " + e.what();
    return r;
  }
}

std::vector<CriterionResult> run_all(const VerifyOptions& opts, const std::vector<int>& ids) {
  std::vector<CriterionResult> out;
  if (ids.empty()) {
    for (int id = 1; id <= kCount; ++id) out.push_back(run(id, opts));
  } else {
    for (int id : ids) out.push_back(run(id, opts));
  }
  return out;
}

void write_report(std::ostream& out, const std::vector<CriterionResult>& results) {
  int passed = 0;
  for (const auto& r : results) {
    passed += r.pass;
    out << "[" << r.id << "] " << (r.pass ? "PASS" : "FAIL") << "  " << r.title << "\n";
    for (const auto& m : r.measurements) {
      out << "    " << m.name << " = " << fmt_double(m.value) << "  (bound " << fmt_double(m.bound) << ")\n";
    }
    if (!r.note.empty()) out << "    note: " << r.note << "\n";
  }
  out << passed << "/" << results.size() << " checks passed\n";
}

}  // namespace ldpath::criteria
