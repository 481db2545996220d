#include "ldpath/badness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ldpath/format.hpp"
#include "ldpath/magnetization.hpp"
#include "ldpath/parallel.hpp"
#include "ldpath/random.hpp"

namespace ldpath::badness {

BadnessOptions::BadnessOptions() : lagrangian(magnetization::lagrangian_model()) { open.solver.steps = 200; }

double transition_cost(const trajectory::Lagrangian& lagrangian, double m_start, double m_end, double T,
                       const trajectory::SolverOptions& opts) {
  return trajectory::minimize_action_fixed(lagrangian, m_start, m_end, T, opts).value;
}

namespace {

trajectory::OpenStartResult solve(const RateFunctionSpec& rate, double mT, double T, const BadnessOptions& opts) {
  return trajectory::minimize_action_open_start(opts.lagrangian, rate.as_function(), mT, T, opts.open);
}

std::size_t nearest(std::span<const InitialPoint> set, double g) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.size(); ++i) {
    if (std::abs(set[i].gamma0 - g) < std::abs(set[best].gamma0 - g)) best = i;
  }
  return best;
}

}  // namespace

std::vector<InitialPoint> optimal_initials(const RateFunctionSpec& rate, double mT, double T,
                                           const BadnessOptions& opts) {
  const auto result = solve(rate, mT, T, opts);
  std::vector<InitialPoint> out;
  out.reserve(result.minimizers.size());
  for (const auto& m : result.minimizers) out.push_back({m.gamma0, m.value});
  return out;
}

BadnessVerdict is_bad(const RateFunctionSpec& rate, double mT, double T, const BadnessOptions& opts) {
  BadnessVerdict v;
  v.minimizers = optimal_initials(rate, mT, T, opts);
  if (v.minimizers.size() < 2) {
    v.diagnostic = "single optimal history";
    return v;
  }
  for (int n = 0; n < opts.perturbation_levels; ++n) {
    const double h = opts.delta * std::ldexp(1.0, -n);
    for (int sign : {1, -1}) {
      const double end = mT + sign * h;
      if (!(std::abs(end) < 1.0)) continue;
      // Selection is the strict global minimizer; ties inside the cluster
      // tolerance are broken by value alone.
      const double g = solve(rate, end, T, opts).best().gamma0;
      (sign > 0 ? v.plus_branch : v.minus_branch).push_back(g);
    }
  }
  if (v.plus_branch.empty() || v.minus_branch.empty()) {
    v.diagnostic = "perturbed endpoints leave the state space";
    return v;
  }
  const std::span<const InitialPoint> set(v.minimizers);
  const std::size_t plus_target = nearest(set, v.plus_branch.back());
  const std::size_t minus_target = nearest(set, v.minus_branch.back());
  auto settles = [&](const std::vector<double>& branch, std::size_t target) {
    const double first = std::abs(branch.front() - set[target].gamma0);
    const double last = std::abs(branch.back() - set[target].gamma0);
    return last <= first + 1e-9;
  };
  const double separation = std::abs(set[plus_target].gamma0 - set[minus_target].gamma0);
  const double selected_gap = std::abs(v.plus_branch.back() - v.minus_branch.back());
  v.bad = plus_target != minus_target && separation > opts.epsilon && selected_gap > opts.epsilon &&
          settles(v.plus_branch, plus_target) && settles(v.minus_branch, minus_target);
  v.diagnostic = "plus->" + fmt_double(set[plus_target].gamma0) + " minus->" + fmt_double(set[minus_target].gamma0) +
                 " gap=" + fmt_double(selected_gap);
  return v;
}

const char* label_name(Label label) {
  switch (label) {
    case Label::nature:
      return "nature";
    case Label::nurture:
      return "nurture";
    case Label::mixed:
      return "mixed";
  }
  return "mixed";
}

Classification nature_nurture_classify(const RateFunctionSpec& rate, double mT, double T,
                                       std::span<const InitialPoint> minimizers, double dead_band) {
  Classification c;
  const double target = mT * std::exp(2.0 * T);
  for (const auto& m : minimizers) {
    const double dn = std::abs(m.gamma0 - target);
    double du = kInf;
    for (double a : rate.minimizers()) du = std::min(du, std::abs(m.gamma0 - a));
    Label l = Label::mixed;
    if (std::abs(dn - du) >= dead_band) l = dn < du ? Label::nature : Label::nurture;
    c.labels.push_back(l);
    c.d_nature.push_back(dn);
    c.d_nurture.push_back(du);
  }
  if (!c.labels.empty() && std::all_of(c.labels.begin(), c.labels.end(), [&](Label l) { return l == c.labels[0]; })) {
    c.label = c.labels[0];
  }
  return c;
}

Classification nature_nurture_classify(const RateFunctionSpec& rate, double mT, double T,
                                       const BadnessOptions& opts) {
  const auto minimizers = optimal_initials(rate, mT, T, opts);
  return nature_nurture_classify(rate, mT, T, minimizers, opts.dead_band);
}

BadnessScanResult badness_scan(const RateFunctionSpec& rate, std::span<const double> Ts, std::span<const double> mTs,
                               const BadnessOptions& opts, std::uint64_t seed, unsigned workers) {
  BadnessScanResult result;
  result.cells.resize(Ts.size() * mTs.size());
  parallel_for(result.cells.size(), workers, [&](std::size_t idx) {
    ScanCell& cell = result.cells[idx];
    cell.T = Ts[idx / mTs.size()];
    cell.mT = mTs[idx % mTs.size()];
    BadnessOptions local = opts;
    local.open.solver.seed = derive_seed(seed, idx);
    local.open.solver.workers = 1;
    try {
      const BadnessVerdict v = is_bad(rate, cell.mT, cell.T, local);
      cell.minimizers = v.minimizers;
      cell.bad = v.bad;
      cell.branch_diagnostic = v.diagnostic;
      cell.cost = kInf;
      for (const auto& m : v.minimizers) cell.cost = std::min(cell.cost, m.cost);
      const Classification c = nature_nurture_classify(rate, cell.mT, cell.T, v.minimizers, local.dead_band);
      cell.label = c.label;
      if (!c.d_nature.empty()) {
        cell.d_nature = c.d_nature.front();
        cell.d_nurture = c.d_nurture.front();
      }
    } catch (const Error& e) {
      cell.error = e.kind();
    }
  });
  return result;
}

void write_scan_csv(std::ostream& out, const BadnessScanResult& result) {
  out << "T,mT,n_minimizers,gamma0_list,cost,bad,label,d_nature,d_nurture\n";
  for (const auto& c : result.cells) {
    std::string gammas;
    for (std::size_t i = 0; i < c.minimizers.size(); ++i) {
      if (i) gammas += ';';
      gammas += fmt_double(c.minimizers[i].gamma0);
    }
    out << fmt_double(c.T) << ',' << fmt_double(c.mT) << ',' << c.minimizers.size() << ',' << gammas << ','
        << (c.error.empty() ? fmt_double(c.cost) : c.error) << ',' << (c.bad ? 1 : 0) << ','
        << label_name(c.label) << ',' << fmt_double(c.d_nature) << ',' << fmt_double(c.d_nurture) << '\n';
  }
}

}  // namespace ldpath::badness
