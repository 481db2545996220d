#include "ldpath/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ldpath/error.hpp"
#include "ldpath/parallel.hpp"
#include "ldpath/random.hpp"

namespace ldpath::lattice {

namespace {

int wrap(int v, int side, int radius) {
  int r = (v + radius) % side;
  if (r < 0) r += side;
  return r - radius;
}

}  // namespace

Torus::Torus(int dim, int radius) : dim_(dim), radius_(radius) {
  if (dim != 1 && dim != 2) throw Error("InvalidParams", "dimension must be 1 or 2");
  if (radius < 0) throw Error("InvalidParams", "torus radius must be >= 0");
}

Offset Torus::reduce(const Offset& s) const {
  return {wrap(s[0], side(), radius_), dim_ == 1 ? 0 : wrap(s[1], side(), radius_)};
}

std::size_t Torus::index(const Offset& s) const {
  const Offset r = reduce(s);
  const auto x = static_cast<std::size_t>(r[0] + radius_);
  if (dim_ == 1) return x;
  return static_cast<std::size_t>(r[1] + radius_) * static_cast<std::size_t>(side()) + x;
}

Offset Torus::site(std::size_t index) const {
  const auto s = static_cast<std::size_t>(side());
  if (dim_ == 1) return {static_cast<int>(index) - radius_, 0};
  return {static_cast<int>(index % s) - radius_, static_cast<int>(index / s) - radius_};
}

SpinConfiguration::SpinConfiguration(Torus torus, std::vector<std::int8_t> values)
    : torus_(torus), values_(std::move(values)) {
  if (values_.size() != torus_.volume()) throw Error("InvalidParams", "configuration size does not match the torus");
  for (auto v : values_) {
    if (v != 1 && v != -1) throw Error("InvalidParams", "spins must be +1 or -1");
  }
}

SpinConfiguration SpinConfiguration::constant(Torus torus, int value) {
  return {torus, std::vector<std::int8_t>(torus.volume(), static_cast<std::int8_t>(value))};
}

SpinConfiguration SpinConfiguration::random(Torus torus, double bias, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::int8_t> v(torus.volume());
  for (auto& s : v) s = rng.uniform() < 0.5 * (1.0 + bias) ? 1 : -1;
  return {torus, std::move(v)};
}

SpinConfiguration SpinConfiguration::flipped(std::size_t i) const {
  SpinConfiguration copy = *this;
  copy.flip(i);
  return copy;
}

double SpinConfiguration::magnetization() const {
  long sum = 0;
  for (auto v : values_) sum += v;
  return static_cast<double>(sum) / static_cast<double>(values_.size());
}

void SpinConfiguration::write(std::ostream& out) const {
  const auto side = static_cast<std::size_t>(torus_.side());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out << static_cast<int>(values_[i]);
    out << ((i + 1) % side == 0 ? '\n' : ' ');
  }
}

SpinConfiguration SpinConfiguration::read(std::istream& in, int dim) {
  std::vector<std::int8_t> v;
  std::string line;
  std::size_t rows = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::size_t count = 0;
    int s = 0;
    while (ls >> s) {
      v.push_back(static_cast<std::int8_t>(s));
      ++count;
    }
    if (count == 0) continue;
    if (width == 0) width = count;
    if (count != width) throw Error("InvalidParams", "ragged configuration rows");
    ++rows;
  }
  if (width == 0 || width % 2 == 0) throw Error("InvalidParams", "row length must be odd (2N + 1)");
  if ((dim == 1 && rows != 1) || (dim == 2 && rows != width)) throw Error("InvalidParams", "bad configuration shape");
  return {Torus(dim, static_cast<int>(width / 2)), std::move(v)};
}

BasisSet canonical(BasisSet set) {
  std::sort(set.begin(), set.end());
  return set;
}

CoefficientMap CoefficientMap::constant(double value) {
  CoefficientMap f;
  f.add({}, value);
  return f;
}

CoefficientMap CoefficientMap::single(BasisSet set, double coefficient) {
  CoefficientMap f;
  f.add(std::move(set), coefficient);
  return f;
}

void CoefficientMap::add(BasisSet set, double coefficient) {
  set = canonical(std::move(set));
  if (std::adjacent_find(set.begin(), set.end()) != set.end()) {
    throw Error("InvalidParams", "basis set contains a repeated offset");
  }
  auto it = terms_.find(set);
  if (it == terms_.end()) {
    if (coefficient != 0.0) terms_.emplace(std::move(set), coefficient);
    return;
  }
  it->second += coefficient;
  if (it->second == 0.0) terms_.erase(it);
}

CoefficientMap CoefficientMap::scaled(double factor) const {
  CoefficientMap out;
  for (const auto& [set, a] : terms_) out.add(set, factor * a);
  return out;
}

CoefficientMap CoefficientMap::operator+(const CoefficientMap& other) const {
  CoefficientMap out = *this;
  for (const auto& [set, a] : other.terms_) out.add(set, a);
  return out;
}

double CoefficientMap::coefficient(const BasisSet& set) const {
  const auto it = terms_.find(canonical(set));
  return it == terms_.end() ? 0.0 : it->second;
}

namespace {

// Extended-precision accumulation keeps the exact flip identities at the
// rounding level of the final double result.
long double evaluate_extended(const CoefficientMap& f, const SpinConfiguration& config, std::size_t k) {
  const Torus& torus = config.torus();
  const Offset base = torus.site(k);
  long double total = 0.0L;
  for (const auto& [set, a] : f.terms()) {
    int prod = 1;
    for (const Offset& o : set) prod *= config.at({base[0] + o[0], base[1] + o[1]});
    total += static_cast<long double>(a) * prod;
  }
  return total;
}

}  // namespace

double CoefficientMap::evaluate(const SpinConfiguration& config, std::size_t k) const {
  return static_cast<double>(evaluate_extended(*this, config, k));
}

bool fits(const CoefficientMap& f, const Torus& torus) {
  for (const auto& [set, a] : f.terms()) {
    std::set<std::size_t> seen;
    for (const Offset& o : set) {
      if (torus.dim() == 1 && o[1] != 0) return false;
      if (!seen.insert(torus.index(o)).second) return false;
    }
  }
  return true;
}

CoefficientMap apply_D(const CoefficientMap& f, const std::optional<Torus>& torus) {
  CoefficientMap out;
  for (const auto& [set, a] : f.terms()) {
    for (const Offset& shift : set) {
      BasisSet moved;
      moved.reserve(set.size());
      for (const Offset& o : set) {
        const Offset t{o[0] - shift[0], o[1] - shift[1]};
        moved.push_back(torus ? torus->reduce(t) : t);
      }
      out.add(std::move(moved), -2.0 * a);
    }
  }
  return out;
}

namespace {

void require_fit(const CoefficientMap& f, const Torus& torus) {
  if (!fits(f, torus)) throw Error("DependenceSetTooLarge", "a basis set wraps around the torus");
}

}  // namespace

double empirical_average(const CoefficientMap& f, const SpinConfiguration& config) {
  require_fit(f, config.torus());
  double total = 0.0;
  for (std::size_t k = 0; k < config.size(); ++k) total += f.evaluate(config, k);
  return total / static_cast<double>(config.size());
}

namespace {

long double response_extended(const CoefficientMap& f, const SpinConfiguration& config, std::size_t k) {
  const SpinConfiguration flipped = config.flipped(k);
  long double total = 0.0L;
  for (std::size_t j = 0; j < config.size(); ++j) {
    total += evaluate_extended(f, flipped, j) - evaluate_extended(f, config, j);
  }
  return total;
}

}  // namespace

double single_flip_response(const CoefficientMap& f, const SpinConfiguration& config, std::size_t k) {
  require_fit(f, config.torus());
  return static_cast<double>(response_extended(f, config, k));
}

LocalRateSpec::LocalRateSpec(int dim, int radius, std::vector<double> table)
    : dim_(dim), radius_(radius), table_(std::move(table)) {
  if (dim != 1 && dim != 2) throw Error("InvalidParams", "dimension must be 1 or 2");
  if (radius < 0) throw Error("InvalidParams", "window radius must be >= 0");
  for (int dy = dim == 1 ? 0 : -radius; dy <= (dim == 1 ? 0 : radius); ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) window_.push_back({dx, dy});
  }
  if (window_.size() > 20) throw Error("InvalidParams", "rate window too large");
  if (table_.size() != (std::size_t{1} << window_.size())) {
    throw Error("InvalidParams", "rate table needs one entry per window pattern");
  }
  for (double r : table_) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error("InvalidParams", "rates must be strictly positive");
  }
}

LocalRateSpec LocalRateSpec::constant(int dim, double rate) { return {dim, 0, {rate, rate}}; }

LocalRateSpec LocalRateSpec::random(int dim, int radius, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t sites = dim == 1 ? static_cast<std::size_t>(2 * radius + 1)
                                     : static_cast<std::size_t>(2 * radius + 1) * static_cast<std::size_t>(2 * radius + 1);
  std::vector<double> table(std::size_t{1} << sites);
  for (double& r : table) r = lo + (hi - lo) * rng.uniform();
  return {dim, radius, std::move(table)};
}

bool LocalRateSpec::is_constant() const {
  return std::all_of(table_.begin(), table_.end(), [&](double r) { return r == table_.front(); });
}

std::size_t LocalRateSpec::pattern_code(const SpinConfiguration& config, std::size_t site) const {
  const Offset base = config.torus().site(site);
  std::size_t code = 0;
  for (std::size_t j = 0; j < window_.size(); ++j) {
    if (config.at({base[0] + window_[j][0], base[1] + window_[j][1]}) > 0) code |= std::size_t{1} << j;
  }
  return code;
}

std::string LocalRateSpec::pattern_string(std::size_t code) const {
  std::string s;
  const auto row = static_cast<std::size_t>(2 * radius_ + 1);
  for (std::size_t j = 0; j < window_.size(); ++j) {
    if (j > 0 && j % row == 0) s += '/';
    s += (code >> j) & 1U ? '+' : '-';
  }
  return s;
}

LocalRateSpec LocalRateSpec::from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  const int radius = j.value("radius", 0);
  LocalRateSpec probe(dim, radius, std::vector<double>(
                                       std::size_t{1} << (dim == 1 ? 2 * radius + 1 : (2 * radius + 1) * (2 * radius + 1)),
                                       1.0));
  const auto& rates = j.at("rates");
  if (rates.is_number()) return {dim, radius, std::vector<double>(probe.table_.size(), rates.get<double>())};
  std::vector<double> table(probe.table_.size(), 0.0);
  if (rates.size() != table.size()) throw Error("InvalidParams", "rate table must list every window pattern");
  for (std::size_t code = 0; code < table.size(); ++code) {
    const std::string key = probe.pattern_string(code);
    if (!rates.contains(key)) throw Error("InvalidParams", "rate table is missing pattern " + key);
    table[code] = rates.at(key).get<double>();
  }
  return {dim, radius, std::move(table)};
}

nlohmann::json LocalRateSpec::to_json() const {
  nlohmann::json rates = nlohmann::json::object();
  for (std::size_t code = 0; code < table_.size(); ++code) rates[pattern_string(code)] = table_[code];
  return {{"dim", dim_}, {"radius", radius_}, {"rates", rates}};
}

namespace {

// Complete binary tree of partial sums over per-site rates.
class RateTree {
 public:
  explicit RateTree(std::size_t n) : leaves_(1) {
    while (leaves_ < n) leaves_ <<= 1;
    node_.assign(2 * leaves_, 0.0);
  }

  void set(std::size_t i, double v) {
    std::size_t p = i + leaves_;
    node_[p] = v;
    for (p >>= 1; p >= 1; p >>= 1) node_[p] = node_[2 * p] + node_[2 * p + 1];
  }

  double total() const { return node_[1]; }

  std::size_t find(double u) const {
    std::size_t p = 1;
    while (p < leaves_) {
      if (u < node_[2 * p] || node_[2 * p + 1] == 0.0) {
        p = 2 * p;
      } else {
        u -= node_[2 * p];
        p = 2 * p + 1;
      }
    }
    return p - leaves_;
  }

 private:
  std::size_t leaves_;
  std::vector<double> node_;
};

}  // namespace

SimulationResult glauber_simulate(const SpinConfiguration& start, const LocalRateSpec& rates, double T,
                                  std::uint64_t seed) {
  if (!(T >= 0.0)) throw Error("InvalidParams", "time horizon must be >= 0");
  if (rates.dim() != start.torus().dim()) throw Error("InvalidParams", "rate table dimension mismatch");
  SimulationResult out{start, {}};
  if (T == 0.0) return out;
  SpinConfiguration& config = out.final_state;
  const Torus& torus = config.torus();
  RateTree tree(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) tree.set(i, rates.rate(config, i));
  Rng rng(seed);
  double t = 0.0;
  for (;;) {
    t += rng.exponential(tree.total());
    if (t >= T) break;
    const std::size_t site = tree.find(rng.uniform() * tree.total());
    config.flip(site);
    out.events.push_back({t, site});
    const Offset at = torus.site(site);
    for (const Offset& w : rates.window()) {
      const std::size_t k = torus.index({at[0] - w[0], at[1] - w[1]});
      tree.set(k, rates.rate(config, k));
    }
  }
  return out;
}

SpinConfiguration configuration_at(const SpinConfiguration& start, std::span<const FlipEvent> events, double t) {
  SpinConfiguration config = start;
  for (const auto& e : events) {
    if (e.time > t) break;
    config.flip(e.site);
  }
  return config;
}

std::vector<MomentRow> simulate_moments(const SpinConfiguration& start, const LocalRateSpec& rates,
                                        std::span<const BasisSet> observables, std::span<const double> times,
                                        int replicas, std::uint64_t seed, unsigned workers) {
  if (replicas < 2) throw Error("InvalidParams", "need at least two replicas");
  std::vector<CoefficientMap> fs;
  for (const auto& set : observables) {
    fs.push_back(CoefficientMap::single(set));
    require_fit(fs.back(), start.torus());
  }
  const double horizon = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
  const std::size_t cells = fs.size() * times.size();
  std::vector<double> samples(static_cast<std::size_t>(replicas) * cells);
  parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
    const SimulationResult sim = glauber_simulate(start, rates, horizon, derive_seed(seed, r));
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const SpinConfiguration snap = configuration_at(start, sim.events, times[ti]);
      for (std::size_t oi = 0; oi < fs.size(); ++oi) {
        samples[r * cells + oi * times.size() + ti] = empirical_average(fs[oi], snap);
      }
    }
  });
  std::vector<MomentRow> rows;
  for (std::size_t oi = 0; oi < fs.size(); ++oi) {
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      double mean = 0.0;
      for (int r = 0; r < replicas; ++r) mean += samples[static_cast<std::size_t>(r) * cells + oi * times.size() + ti];
      mean /= replicas;
      double var = 0.0;
      for (int r = 0; r < replicas; ++r) {
        const double d = samples[static_cast<std::size_t>(r) * cells + oi * times.size() + ti] - mean;
        var += d * d;
      }
      var /= (replicas - 1);
      rows.push_back({oi, times[ti], mean, std::sqrt(var / replicas)});
    }
  }
  return rows;
}

GeneratorPair nonlinear_generator_exact(const SpinConfiguration& config, const CoefficientMap& f,
                                        const LocalRateSpec& rates) {
  require_fit(f, config.torus());
  const CoefficientMap df = apply_D(f, config.torus());
  const auto volume = static_cast<long double>(config.size());
  long double lhs = 0.0L;
  long double rhs = 0.0L;
  for (std::size_t k = 0; k < config.size(); ++k) {
    const long double c = rates.rate(config, k);
    lhs += c * std::expm1(response_extended(f, config, k));
    rhs += c * std::expm1(evaluate_extended(df, config, k));
  }
  return {static_cast<double>(lhs / volume), static_cast<double>(rhs / volume)};
}

GeneralGeneratorPair nonlinear_generator_general(const SpinConfiguration& config, const SmoothFunction& psi,
                                                 std::span<const CoefficientMap> fs, const LocalRateSpec& rates) {
  const auto volume = static_cast<double>(config.size());
  std::vector<double> x(fs.size());
  std::vector<CoefficientMap> dfs;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    x[i] = empirical_average(fs[i], config);
    dfs.push_back(apply_D(fs[i], config.torus()));
  }
  const double base = psi.value(x);
  const std::vector<double> grad = psi.gradient(x);
  double finite = 0.0;
  double limit = 0.0;
  std::vector<double> xk(fs.size());
  for (std::size_t k = 0; k < config.size(); ++k) {
    const double c = rates.rate(config, k);
    double linear = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      xk[i] = x[i] + single_flip_response(fs[i], config, k) / volume;
      linear += grad[i] * dfs[i].evaluate(config, k);
    }
    finite += c * std::expm1(volume * (psi.value(xk) - base));
    limit += c * std::expm1(linear);
  }
  return {finite / volume, limit / volume};
}

CoefficientMap random_coefficient_map(int dim, int max_sets, int max_size, int spread, std::uint64_t seed) {
  Rng rng(seed);
  CoefficientMap f;
  const int sets = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_sets)));
  const auto width = static_cast<std::size_t>(2 * spread + 1);
  for (int s = 0; s < sets; ++s) {
    const int size = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_size)));
    std::set<Offset> chosen;
    while (static_cast<int>(chosen.size()) < size) {
      const int x = static_cast<int>(rng.index(width)) - spread;
      const int y = dim == 1 ? 0 : static_cast<int>(rng.index(width)) - spread;
      chosen.insert({x, y});
    }
    f.add(BasisSet(chosen.begin(), chosen.end()), 2.0 * rng.uniform() - 1.0);
  }
  return f;
}

namespace {

std::vector<Offset> stats_window(int dim, int depth) {
  std::vector<Offset> w;
  for (int dy = 0; dy < (dim == 1 ? 1 : depth); ++dy) {
    for (int dx = 0; dx < depth; ++dx) w.push_back({dx, dy});
  }
  return w;
}

std::size_t window_code(const SpinConfiguration& config, std::size_t k, std::span<const Offset> window) {
  const Offset base = config.torus().site(k);
  std::size_t code = 0;
  for (std::size_t j = 0; j < window.size(); ++j) {
    if (config.at({base[0] + window[j][0], base[1] + window[j][1]}) > 0) code |= std::size_t{1} << j;
  }
  return code;
}

double product_probability(std::size_t code, std::size_t sites, double y) {
  double p = 1.0;
  for (std::size_t j = 0; j < sites; ++j) p *= 0.5 * (1.0 + (((code >> j) & 1U) ? y : -y));
  return p;
}

}  // namespace

EmpiricalStats empirical_stats(const SpinConfiguration& config, int depth) {
  const int dim = config.torus().dim();
  if (depth < 1 || depth > config.torus().side()) throw Error("InvalidParams", "window depth out of range");
  const auto window = stats_window(dim, depth);
  if (window.size() > 20) throw Error("InvalidParams", "window too large");
  EmpiricalStats s;
  s.dim = dim;
  s.depth = depth;
  s.counts.assign(std::size_t{1} << window.size(), 0);
  for (std::size_t k = 0; k < config.size(); ++k) ++s.counts[window_code(config, k, window)];
  s.total = config.size();
  return s;
}

double relative_entropy_density_estimate(const EmpiricalStats& stats, double y) {
  if (!(std::abs(y) < 1.0)) throw Error("EmptyCell", "reference measure must give every pattern positive mass");
  const std::size_t sites = stats.window_sites();
  double total = 0.0;
  for (std::size_t code = 0; code < stats.counts.size(); ++code) {
    if (stats.counts[code] == 0) continue;
    const double p = stats.frequency(code);
    total += p * std::log(p / product_probability(code, sites, y));
  }
  return total / static_cast<double>(sites);
}

EntropyEstimate relative_entropy_bootstrap(const SpinConfiguration& config, double y, int depth, int resamples,
                                           std::uint64_t seed) {
  const EmpiricalStats full = empirical_stats(config, depth);
  const double value = relative_entropy_density_estimate(full, y);
  const auto window = stats_window(config.torus().dim(), depth);
  std::vector<std::size_t> codes(config.size());
  for (std::size_t k = 0; k < config.size(); ++k) codes[k] = window_code(config, k, window);
  Rng rng(seed);
  EmpiricalStats boot = full;
  double mean = 0.0;
  double sq = 0.0;
  for (int b = 0; b < resamples; ++b) {
    std::fill(boot.counts.begin(), boot.counts.end(), 0);
    for (std::size_t k = 0; k < codes.size(); ++k) ++boot.counts[codes[rng.index(codes.size())]];
    const double v = relative_entropy_density_estimate(boot, y);
    mean += v;
    sq += v * v;
  }
  mean /= resamples;
  const double var = std::max(0.0, sq / resamples - mean * mean) * resamples / std::max(1, resamples - 1);
  return {value, std::sqrt(var)};
}

}  // namespace ldpath::lattice
