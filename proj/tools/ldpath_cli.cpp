// Command-line harness: every experiment reads one JSON config with a block per
// command; --seed, --workers and --out-dir override the top-level fields.
//
// Exit codes: 0 success, 1 runtime error (module error kind on stderr),
// 2 configuration error (no output files are written).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ldpath/badness.hpp"
#include "ldpath/criteria.hpp"
#include "ldpath/error.hpp"
#include "ldpath/finite_jump.hpp"
#include "ldpath/format.hpp"
#include "ldpath/lattice.hpp"
#include "ldpath/magnetization.hpp"
#include "ldpath/poisson_walk.hpp"
#include "ldpath/random.hpp"
#include "ldpath/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ldpath;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void reject(const std::string& field, const std::string& why) {
  throw ConfigError("field '" + field + "': " + why);
}

// Typed, path-aware access to one block of the config document.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) reject(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const {
    if (!j_.contains(key)) reject(field(key), "missing");
    return j_.at(key);
  }
  Block child(const std::string& key) const { return {raw(key), field(key)}; }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      reject(field(key), "missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) reject(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) reject(field(key), "must be finite");
    return x;
  }

  long integer(const std::string& key, std::optional<long> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      reject(field(key), "missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) reject(field(key), "expected an integer");
    return v.get<long>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      reject(field(key), "missing");
    }
    if (!j_.at(key).is_string()) reject(field(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  // A list of numbers, or {"linear": [lo, hi, n]} / {"log": [lo, hi, n]}.
  std::vector<double> grid(const std::string& key) const {
    const json& v = raw(key);
    std::vector<double> out;
    if (v.is_array()) {
      for (const auto& x : v) {
        if (!x.is_number()) reject(field(key), "expected numbers");
        out.push_back(x.get<double>());
      }
      return out;
    }
    if (v.is_object() && v.size() == 1 && (v.contains("linear") || v.contains("log"))) {
      const bool logarithmic = v.contains("log");
      const json& spec = logarithmic ? v.at("log") : v.at("linear");
      if (!spec.is_array() || spec.size() != 3 || !spec[0].is_number() || !spec[1].is_number() ||
          !spec[2].is_number_integer()) {
        reject(field(key), "range must be [lo, hi, count]");
      }
      const double lo = spec[0].get<double>(), hi = spec[1].get<double>();
      const long n = spec[2].get<long>();
      if (n < 1 || n > 100000) reject(field(key), "count out of range");
      if (logarithmic && !(lo > 0.0 && hi > 0.0)) reject(field(key), "log range needs positive bounds");
      for (long i = 0; i < n; ++i) {
        const double w = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(logarithmic ? std::exp(std::log(lo) + w * (std::log(hi) - std::log(lo))) : lo + w * (hi - lo));
      }
      if (n > 1) out.back() = hi;
      return out;
    }
    reject(field(key), "expected a list or a {linear|log: [lo, hi, n]} range");
  }

  std::vector<long> integers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) reject(field(key), "expected a list of integers");
    std::vector<long> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) reject(field(key), "expected integers");
      out.push_back(x.get<long>());
    }
    return out;
  }

  const json& json_value() const { return j_; }

 private:
  const json& j_;
  std::string path_;
};

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) reject(field, why);
}

double magnetization_field(const Block& b, const std::string& key) {
  const double m = b.number(key);
  require(std::abs(m) <= 1.0, b.field(key), "magnetization must lie in [-1, 1]");
  return m;
}

bool integral_count(long N, double m) {
  const double k = 0.5 * static_cast<double>(N) * (1.0 + m);
  return std::abs(k - std::round(k)) <= 1e-9;
}

struct Context {
  json root;
  std::uint64_t seed = 0;
  bool has_seed = false;
  unsigned workers = 1;
  fs::path out_dir;

  Block block(const std::string& command) const {
    if (!root.contains(command)) reject(command, "missing command block");
    return {root.at(command), command};
  }

  std::uint64_t master_seed(const std::string& command) const {
    if (!has_seed) reject("seed", "a master seed is required for '" + command + "'");
    return seed;
  }
};

// Output files are only opened after the whole config has been validated.
std::ofstream open_output(const Context& ctx, const std::string& name) {
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw Error("IoError", "cannot create " + ctx.out_dir.string() + ": " + ec.message());
  std::ofstream out(ctx.out_dir / name, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + (ctx.out_dir / name).string());
  return out;
}

// Each command validates its block into a plan, then executes it.
using Runner = std::function<int()>;

Runner pw_rate(const Context& ctx) {
  const Block b = ctx.block("pw-rate");
  const double birth = b.number("b"), death = b.number("d", 0.0), t = b.number("t");
  require(birth > 0.0, b.field("b"), "must be > 0");
  require(death >= 0.0, b.field("d"), "must be >= 0");
  require(t > 0.0, b.field("t"), "must be > 0");
  const auto as = b.grid("a");
  std::vector<int> Ns;
  for (long n : b.integers("N")) {
    require(n >= 1 && n <= 1000000, b.field("N"), "entries must be in [1, 1e6]");
    Ns.push_back(static_cast<int>(n));
  }
  return [=, &ctx] {
    std::vector<poisson_walk::RateRow> rows;
    for (double a : as) {
      const auto part = poisson_walk::rate_convergence(birth, death, Ns, t, a);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    auto out = open_output(ctx, "pw_rate.csv");
    poisson_walk::write_rate_csv(out, rows);
    return 0;
  };
}

trajectory::SolverOptions solver_options(const Block& b, const Context& ctx, std::uint64_t seed) {
  trajectory::SolverOptions so;
  so.steps = static_cast<int>(b.integer("steps", 400));
  require(so.steps >= 2 && so.steps <= 100000, b.field("steps"), "must be in [2, 1e5]");
  so.jitter_restarts = static_cast<int>(b.integer("jitter_restarts", so.jitter_restarts));
  require(so.jitter_restarts >= 0, b.field("jitter_restarts"), "must be >= 0");
  so.seed = seed;
  so.workers = ctx.workers;
  return so;
}

Runner mag_rate(const Context& ctx) {
  const Block b = ctx.block("mag-rate");
  const double m0 = magnetization_field(b, "m0"), mT = magnetization_field(b, "mT"), T = b.number("T");
  require(T > 0.0, b.field("T"), "must be > 0");
  std::vector<int> Ns;
  for (long n : b.integers("N")) {
    require(n >= 1 && n <= 1000000, b.field("N"), "entries must be in [1, 1e6]");
    require(integral_count(n, m0) && integral_count(n, mT), b.field("N"), "N(1+m)/2 must be an integer");
    Ns.push_back(static_cast<int>(n));
  }
  const auto so = solver_options(b, ctx, derive_seed(ctx.master_seed("mag-rate"), 1));
  return [=, &ctx] {
    const auto fixed = trajectory::minimize_action_fixed(magnetization::lagrangian_model(), m0, mT, T, so);
    const auto rows = magnetization::rate_table(Ns, m0, T, mT, fixed.value);
    auto out = open_output(ctx, "mag_rate.csv");
    magnetization::write_rate_csv(out, rows);
    return 0;
  };
}

Runner mag_bvp(const Context& ctx) {
  const Block b = ctx.block("mag-bvp");
  const double m0 = magnetization_field(b, "m0"), mT = magnetization_field(b, "mT"), T = b.number("T");
  require(T > 0.0, b.field("T"), "must be > 0");
  const auto so = solver_options(b, ctx, derive_seed(ctx.master_seed("mag-bvp"), 2));
  return [=, &ctx] {
    const auto model = magnetization::lagrangian_model();
    const auto ext = magnetization::extremal(m0, mT, T);
    const auto path = ext.sample(so.steps);
    const auto fixed = trajectory::minimize_action_fixed(model, m0, mT, T, so);
    json report{{"m0", m0},
                {"mT", mT},
                {"T", T},
                {"steps", so.steps},
                {"C1", ext.C1},
                {"C2", ext.C2},
                {"extremal_action", trajectory::action_integral(model, path)},
                {"extremal_el_residual", trajectory::euler_lagrange_residual(model, path)},
                {"minimized_action", fixed.value},
                {"minimizer_el_residual", trajectory::euler_lagrange_residual(model, fixed.path)}};
    {
      auto out = open_output(ctx, "mag_bvp_trajectory.csv");
      trajectory::write_trajectory_csv(out, path);
    }
    auto out = open_output(ctx, "mag_bvp.json");
    out << report.dump(2) << "\n";
    std::cout << "C1 = " << fmt_double(ext.C1) << "\nC2 = " << fmt_double(ext.C2) << "\n";
    return 0;
  };
}

Eigen::VectorXd vector_field(const Block& b, const std::string& key) {
  const auto v = b.grid(key);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Runner fd_lagrangian(const Context& ctx) {
  const Block b = ctx.block("fd-lagrangian");
  const json& rows = b.raw("D");
  require(rows.is_array() && !rows.empty(), b.field("D"), "expected a square matrix");
  const auto n = static_cast<Eigen::Index>(rows.size());
  finite_jump::JumpModel model;
  model.D.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = rows[static_cast<std::size_t>(i)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == n, b.field("D"), "expected a square matrix");
    for (Eigen::Index j = 0; j < n; ++j) {
      require(row[static_cast<std::size_t>(j)].is_number(), b.field("D"), "entries must be numbers");
      model.D(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  model.c = vector_field(b, "c");
  model.mu = vector_field(b, "mu");
  const Eigen::VectorXd alpha = vector_field(b, "alpha");
  require(model.c.size() == n, b.field("c"), "length must match D");
  require(model.mu.size() == n, b.field("mu"), "length must match D");
  require(alpha.size() == n, b.field("alpha"), "length must match D");
  try {
    model.validate();
  } catch (const Error& e) {
    reject("fd-lagrangian", e.what());
  }
  return [=, &ctx] {
    auto attempt = [](auto&& fn) -> json {
      try {
        return fn();
      } catch (const Error& e) {
        return json{{"error", e.kind()}, {"message", e.what()}};
      }
    };
    json report;
    report["variational"] = attempt([&] { return json(finite_jump::lagrangian_variational(model, alpha)); });
    report["dual"] = attempt([&] {
      const auto d = finite_jump::lagrangian_dual(model, alpha);
      return json{{"value", d.value}, {"nu", std::vector<double>(d.nu.data(), d.nu.data() + d.nu.size())}};
    });
    report["closed_form"] = attempt([&] { return json(finite_jump::closed_form_lagrangian(model, alpha)); });
    report["c_mu"] = model.c_mu();
    auto out = open_output(ctx, "fd_lagrangian.json");
    out << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return 0;
  };
}

badness::RateFunctionSpec rate_spec(const Block& b) {
  const std::string kind = b.text("kind");
  if (kind == "bernoulli") {
    const double y = b.number("y");
    require(std::abs(y) < 1.0, b.field("y"), "must lie in (-1, 1)");
    return badness::RateFunctionSpec::bernoulli(y);
  }
  if (kind == "double_well") {
    const double beta = b.number("beta");
    require(beta > 1.0 && beta < 50.0, b.field("beta"), "must lie in (1, 50)");
    return badness::RateFunctionSpec::double_well(beta);
  }
  if (kind == "tabulated") {
    try {
      return badness::RateFunctionSpec::tabulated(b.grid("grid"), b.grid("values"));
    } catch (const Error& e) {
      reject(b.field("grid"), e.what());
    }
  }
  reject(b.field("kind"), "expected bernoulli, double_well or tabulated");
}

Runner scan_bad(const Context& ctx) {
  const Block b = ctx.block("scan-bad");
  const auto rate = rate_spec(b.child("rate"));
  const auto Ts = b.grid("T");
  const auto mTs = b.grid("mT");
  for (double T : Ts) require(T > 0.0, b.field("T"), "entries must be > 0");
  for (double m : mTs) require(std::abs(m) < 1.0, b.field("mT"), "entries must lie in (-1, 1)");
  badness::BadnessOptions opts;
  opts.open.solver = solver_options(b, ctx, 0);
  opts.open.solver.steps = static_cast<int>(b.integer("steps", 200));
  opts.epsilon = b.number("epsilon", opts.epsilon);
  opts.delta = b.number("delta", opts.delta);
  require(opts.epsilon > 0.0, b.field("epsilon"), "must be > 0");
  require(opts.delta > 0.0, b.field("delta"), "must be > 0");
  const std::uint64_t seed = ctx.master_seed("scan-bad");
  const unsigned workers = ctx.workers;
  opts.open.solver.workers = 1;
  return [=, &ctx] {
    const auto result = badness::badness_scan(rate, Ts, mTs, opts, seed, workers);
    auto out = open_output(ctx, "scan_bad.csv");
    badness::write_scan_csv(out, result);
    return 0;
  };
}

lattice::LocalRateSpec rates_field(const Block& b, int dim) {
  if (!b.has("rates")) return lattice::LocalRateSpec::constant(dim);
  try {
    json spec = b.raw("rates");
    if (!spec.contains("dim")) spec["dim"] = dim;
    const auto r = lattice::LocalRateSpec::from_json(spec);
    require(r.dim() == dim, b.field("rates"), "dimension must match the lattice");
    return r;
  } catch (const Error& e) {
    reject(b.field("rates"), e.what());
  } catch (const json::exception& e) {
    reject(b.field("rates"), e.what());
  }
}

Runner lattice_sim(const Context& ctx) {
  const Block b = ctx.block("lattice-sim");
  const long dim = b.integer("dim", 1), radius = b.integer("radius");
  require(dim == 1 || dim == 2, b.field("dim"), "must be 1 or 2");
  require(radius >= 0 && radius <= (dim == 1 ? 500000 : 1000), b.field("radius"), "out of range");
  const lattice::Torus torus(static_cast<int>(dim), static_cast<int>(radius));
  const auto rates = rates_field(b, static_cast<int>(dim));
  const double bias = b.number("initial_bias", 1.0);
  require(std::abs(bias) <= 1.0, b.field("initial_bias"), "must lie in [-1, 1]");
  const auto times = b.grid("times");
  for (double t : times) require(t >= 0.0, b.field("times"), "entries must be >= 0");
  const long replicas = b.integer("replicas");
  require(replicas >= 2 && replicas <= 1000000, b.field("replicas"), "must be in [2, 1e6]");
  std::vector<lattice::BasisSet> observables;
  const json& obs = b.raw("observables");
  require(obs.is_array() && !obs.empty(), b.field("observables"), "expected a list of offset lists");
  for (const auto& set : obs) {
    lattice::BasisSet s;
    require(set.is_array(), b.field("observables"), "expected offset lists");
    for (const auto& o : set) {
      require(o.is_array() && (o.size() == 1 || o.size() == 2), b.field("observables"), "offsets are [x] or [x, y]");
      for (const auto& c : o) require(c.is_number_integer(), b.field("observables"), "offsets must be integers");
      s.push_back({o[0].get<int>(), o.size() == 2 ? o[1].get<int>() : 0});
    }
    try {
      if (!lattice::fits(lattice::CoefficientMap::single(s), torus)) {
        reject(b.field("observables"), "dependence set does not fit in the torus");
      }
    } catch (const Error& e) {
      reject(b.field("observables"), e.what());
    }
    observables.push_back(lattice::canonical(s));
  }
  const std::uint64_t seed = ctx.master_seed("lattice-sim");
  return [=, &ctx] {
    const auto start = bias == 1.0 || bias == -1.0
                           ? lattice::SpinConfiguration::constant(torus, static_cast<int>(bias))
                           : lattice::SpinConfiguration::random(torus, bias, derive_seed(seed, 0xfeed));
    const auto rows = lattice::simulate_moments(start, rates, observables, times, static_cast<int>(replicas), seed,
                                                ctx.workers);
    {
      auto out = open_output(ctx, "lattice_moments.csv");
      out << "observable,t,mean,standard_error,expected_independent\n";
      for (const auto& r : rows) {
        const double initial = lattice::empirical_average(lattice::CoefficientMap::single(observables[r.observable]), start);
        const double expected =
            initial * std::exp(-2.0 * static_cast<double>(observables[r.observable].size()) * r.t);
        out << r.observable << ',' << fmt_double(r.t) << ',' << fmt_double(r.mean) << ','
            << fmt_double(r.standard_error) << ',' << fmt_double(expected) << '\n';
      }
    }
    // Replica 0 again, for its event log and final snapshot.
    const double horizon = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    const auto sim = lattice::glauber_simulate(start, rates, horizon, derive_seed(seed, 0));
    {
      auto out = open_output(ctx, "lattice_events.csv");
      out << "time,site\n";
      for (const auto& e : sim.events) out << fmt_double(e.time) << ',' << e.site << '\n';
    }
    auto out = open_output(ctx, "lattice_final.txt");
    sim.final_state.write(out);
    return 0;
  };
}

Runner lattice_check(const Context& ctx) {
  const Block b = ctx.block("lattice-check");
  const long instances = b.integer("instances", 100);
  require(instances >= 1 && instances <= 100000, b.field("instances"), "must be in [1, 1e5]");
  const long max_sets = b.integer("max_sets", 3), max_size = b.integer("max_size", 3);
  require(max_sets >= 1 && max_sets <= 8, b.field("max_sets"), "must be in [1, 8]");
  require(max_size >= 1 && max_size <= 4, b.field("max_size"), "must be in [1, 4]");
  const double rate_lo = b.number("rate_lo", 0.2), rate_hi = b.number("rate_hi", 5.0);
  require(rate_lo > 0.0 && rate_hi >= rate_lo, b.field("rate_lo"), "need 0 < rate_lo <= rate_hi");
  std::vector<long> sides = b.has("scaling_sides") ? b.integers("scaling_sides") : std::vector<long>{11, 21, 41};
  for (long s : sides) require(s >= 3 && s % 2 == 1 && s <= 100001, b.field("scaling_sides"), "odd sides >= 3");
  const std::uint64_t seed = ctx.master_seed("lattice-check");
  return [=, &ctx] {
    double worst = 0.0;
    {
      auto out = open_output(ctx, "lattice_identity.csv");
      out << "instance,dim,side,lhs,rhs,abs_diff\n";
      for (long i = 0; i < 2 * instances; ++i) {
        const int dim = i < instances ? 1 : 2;
        const lattice::Torus torus(dim, dim == 1 ? 10 : 4);
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const auto rates = lattice::LocalRateSpec::random(dim, 1, rate_lo, rate_hi, rng.bits());
        const auto f = lattice::random_coefficient_map(dim, static_cast<int>(max_sets), static_cast<int>(max_size), 2,
                                                       rng.bits());
        const auto config = lattice::SpinConfiguration::random(torus, 2.0 * rng.uniform() - 1.0, rng.bits());
        const auto p = lattice::nonlinear_generator_exact(config, f, rates);
        const double diff = std::abs(p.lhs - p.rhs);
        worst = std::max(worst, diff);
        out << i << ',' << dim << ',' << torus.side() << ',' << fmt_double(p.lhs) << ',' << fmt_double(p.rhs) << ','
            << fmt_double(diff) << '\n';
      }
    }
    auto out = open_output(ctx, "lattice_scaling.csv");
    out << "side,volume,finite,limit,abs_diff\n";
    const lattice::SmoothFunction psi{[](std::span<const double> x) { return x[0] * x[0]; },
                                      [](std::span<const double> x) { return std::vector<double>{2.0 * x[0]}; }};
    const std::vector<lattice::CoefficientMap> fs{lattice::CoefficientMap::single({{0, 0}})};
    for (long side : sides) {
      const lattice::Torus torus(1, static_cast<int>((side - 1) / 2));
      const auto g = lattice::nonlinear_generator_general(lattice::SpinConfiguration::constant(torus, 1), psi, fs,
                                                          lattice::LocalRateSpec::constant(1));
      out << side << ',' << torus.volume() << ',' << fmt_double(g.finite) << ',' << fmt_double(g.limit) << ','
          << fmt_double(std::abs(g.finite - g.limit)) << '\n';
    }
    std::cout << "max |lhs - rhs| = " << fmt_double(worst) << "\n";
    return worst <= 1e-12 ? 0 : 1;
  };
}

Runner verify(const Context& ctx) {
  std::vector<int> ids;
  if (ctx.root.contains("verify")) {
    const Block b = ctx.block("verify");
    if (b.has("criteria")) {
      for (long id : b.integers("criteria")) {
        require(id >= 1 && id <= criteria::kCount, b.field("criteria"), "unknown criterion");
        ids.push_back(static_cast<int>(id));
      }
    }
  }
  criteria::VerifyOptions opts;
  opts.seed = ctx.master_seed("verify");
  opts.workers = ctx.workers;
  return [=, &ctx] {
    const auto results = criteria::run_all(opts, ids);
    std::ostringstream text;
    criteria::write_report(text, results);
    auto out = open_output(ctx, "verify_report.txt");
    out << text.str();
    std::cout << text.str();
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; }) ? 0 : 1;
  };
}

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError("malformed JSON at line " + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deviation toolkit for spin-flip trajectories"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"pw-rate", "Poisson-walk rate convergence table"},
      {"mag-rate", "magnetization exact rate against the minimized action"},
      {"mag-bvp", "closed-form extremal, minimized path and Euler-Lagrange residuals"},
      {"fd-lagrangian", "variational, dual and closed-form finite-dimensional Lagrangians"},
      {"scan-bad", "badness / nature-nurture phase diagram"},
      {"lattice-sim", "Glauber simulation and moment series"},
      {"lattice-check", "exact generator identity and finite-size scaling suite"},
      {"verify", "full property suite with summary"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--workers", workers, "override the worker count")->check(CLI::Range(1u, 1024u));
    sub->add_option("--out-dir", out_dir, "directory for output files");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Context ctx;
  Runner runner;
  try {
    ctx.root = load_config(config_path);
    if (!ctx.root.is_object()) throw ConfigError("config root must be an object");
    const Block top(ctx.root, "");
    if (top.has("seed")) {
      const json& s = top.raw("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
        reject("seed", "expected a non-negative integer");
      }
      ctx.seed = s.get<std::uint64_t>();
      ctx.has_seed = true;
    }
    if (seed) {
      ctx.seed = *seed;
      ctx.has_seed = true;
    }
    const long w = top.integer("workers", 1);
    require(w >= 1 && w <= 1024, "workers", "must be in [1, 1024]");
    ctx.workers = workers ? *workers : static_cast<unsigned>(w);
    ctx.out_dir = out_dir.empty() ? fs::path(top.text("out_dir", "out")) : fs::path(out_dir);

    if (command == "pw-rate") runner = pw_rate(ctx);
    else if (command == "mag-rate") runner = mag_rate(ctx);
    else if (command == "mag-bvp") runner = mag_bvp(ctx);
    else if (command == "fd-lagrangian") runner = fd_lagrangian(ctx);
    else if (command == "scan-bad") runner = scan_bad(ctx);
    else if (command == "lattice-sim") runner = lattice_sim(ctx);
    else if (command == "lattice-check") runner = lattice_check(ctx);
    else runner = verify(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    return runner();
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << "\n" << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError\n" << e.what() << "\n";
    return 1;
  }
}
