#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

// Finite-torus spin-flip dynamics with translation-invariant local rates,
// local functions in the product basis H_A(s) = prod_{i in A} s_i, and the
// single-flip response operator acting on them.
namespace ldpath::lattice {

using Offset = std::array<int, 2>;   // (x, y); y = 0 in one dimension
using BasisSet = std::vector<Offset>;  // sorted lexicographically

// {-N, ..., N}^d with coordinate-wise arithmetic modulo 2N + 1.
class Torus {
 public:
  Torus(int dim, int radius);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  int side() const { return 2 * radius_ + 1; }
  std::size_t volume() const { return dim_ == 1 ? side() : static_cast<std::size_t>(side()) * side(); }

  Offset reduce(const Offset& site) const;  // into [-N, N]^d
  std::size_t index(const Offset& site) const;
  Offset site(std::size_t index) const;
  Offset add(const Offset& a, const Offset& b) const { return reduce({a[0] + b[0], a[1] + b[1]}); }

  bool operator==(const Torus&) const = default;

 private:
  int dim_;
  int radius_;
};

class SpinConfiguration {
 public:
  SpinConfiguration(Torus torus, std::vector<std::int8_t> values);
  static SpinConfiguration constant(Torus torus, int value);
  // Independent spins, +1 with probability (1 + bias) / 2.
  static SpinConfiguration random(Torus torus, double bias, std::uint64_t seed);

  const Torus& torus() const { return torus_; }
  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  int at(const Offset& site) const { return values_[torus_.index(site)]; }
  void flip(std::size_t i) { values_[i] = static_cast<std::int8_t>(-values_[i]); }
  SpinConfiguration flipped(std::size_t i) const;
  double magnetization() const;
  std::span<const std::int8_t> values() const { return values_; }

  bool operator==(const SpinConfiguration&) const = default;

  // One text line per lattice row, entries 1 / -1 separated by spaces.
  void write(std::ostream& out) const;
  static SpinConfiguration read(std::istream& in, int dim);

 private:
  Torus torus_;
  std::vector<std::int8_t> values_;
};

// Finite linear combination sum_A alpha_A H_A; the empty set is the constant.
class CoefficientMap {
 public:
  CoefficientMap() = default;
  static CoefficientMap constant(double value);
  static CoefficientMap single(BasisSet set, double coefficient = 1.0);

  void add(BasisSet set, double coefficient);
  CoefficientMap scaled(double factor) const;
  CoefficientMap operator+(const CoefficientMap& other) const;

  const std::map<BasisSet, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  double coefficient(const BasisSet& set) const;

  // f(tau_k s) = sum_A alpha_A prod_{a in A} s_{k + a}.
  double evaluate(const SpinConfiguration& config, std::size_t k) const;

  bool operator==(const CoefficientMap&) const = default;

 private:
  std::map<BasisSet, double> terms_;
};

BasisSet canonical(BasisSet set);
// True when the offsets of every basis set are distinct modulo the side.
bool fits(const CoefficientMap& f, const Torus& torus);

// D 1 = 0, D H_A = sum_{r in -A} (-2) H_{A+r}; with a torus the translated
// sets are reduced modulo its side.
CoefficientMap apply_D(const CoefficientMap& f, const std::optional<Torus>& torus = std::nullopt);

// |T|^{-1} sum_k f(tau_k s). Throws DependenceSetTooLarge if f does not fit.
double empirical_average(const CoefficientMap& f, const SpinConfiguration& config);

// sum_j [f(tau_j s^k) - f(tau_j s)] by direct enumeration over translates.
double single_flip_response(const CoefficientMap& f, const SpinConfiguration& config, std::size_t k);

// Strictly positive flip rate read off the (2r+1)^d window around a site.
class LocalRateSpec {
 public:
  LocalRateSpec(int dim, int radius, std::vector<double> table);
  static LocalRateSpec constant(int dim, double rate = 1.0);
  static LocalRateSpec random(int dim, int radius, double lo, double hi, std::uint64_t seed);
  // {"dim": d, "radius": r, "rates": {pattern: rate, ...}} with one entry per
  // pattern; patterns list window spins as '+'/'-', rows (d = 2) joined by '/'.
  static LocalRateSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  const std::vector<Offset>& window() const { return window_; }
  std::span<const double> table() const { return table_; }
  bool is_constant() const;

  std::size_t pattern_code(const SpinConfiguration& config, std::size_t site) const;
  double rate(const SpinConfiguration& config, std::size_t site) const { return table_[pattern_code(config, site)]; }
  std::string pattern_string(std::size_t code) const;

 private:
  int dim_;
  int radius_;
  std::vector<Offset> window_;
  std::vector<double> table_;
};

struct FlipEvent {
  double time;
  std::size_t site;
};

struct SimulationResult {
  SpinConfiguration final_state;
  std::vector<FlipEvent> events;
};

// Exact event-driven simulation on [0, T]: exponential holding times from the
// total rate, flipped site drawn proportionally to its rate, rates refreshed
// only on the window of the flipped site.
SimulationResult glauber_simulate(const SpinConfiguration& start, const LocalRateSpec& rates, double T,
                                  std::uint64_t seed);

SpinConfiguration configuration_at(const SpinConfiguration& start, std::span<const FlipEvent> events, double t);

struct MomentRow {
  std::size_t observable;
  double t;
  double mean;
  double standard_error;
};

// Replica means of <H_A, L_N(s(t))>; replica i uses derive_seed(seed, i).
std::vector<MomentRow> simulate_moments(const SpinConfiguration& start, const LocalRateSpec& rates,
                                        std::span<const BasisSet> observables, std::span<const double> times,
                                        int replicas, std::uint64_t seed, unsigned workers = 1);

struct GeneratorPair {
  double lhs;
  double rhs;
};

// lhs: |T|^{-1} e^{-|T|<f,L>} L_N e^{|T|<f,L>} by enumerating single flips;
// rhs: <c (e^{D_N f} - 1), L_N(s)> through apply_D.
GeneratorPair nonlinear_generator_exact(const SpinConfiguration& config, const CoefficientMap& f,
                                        const LocalRateSpec& rates);

struct SmoothFunction {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct GeneralGeneratorPair {
  double finite;  // exact finite-volume value
  double limit;   // first-order formula with the gradient of Psi
};

GeneralGeneratorPair nonlinear_generator_general(const SpinConfiguration& config, const SmoothFunction& psi,
                                                 std::span<const CoefficientMap> fs, const LocalRateSpec& rates);

// Random f with up to max_sets basis sets of up to max_size offsets drawn from
// [-spread, spread]^d, coefficients uniform in [-1, 1].
CoefficientMap random_coefficient_map(int dim, int max_sets, int max_size, int spread, std::uint64_t seed);

// Pattern counts of the depth-k window (k sites in d = 1, k x k block in
// d = 2) over all translates of one configuration.
struct EmpiricalStats {
  int dim = 1;
  int depth = 1;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::size_t window_sites() const { return dim == 1 ? depth : static_cast<std::size_t>(depth) * depth; }
  double frequency(std::size_t code) const { return static_cast<double>(counts[code]) / static_cast<double>(total); }
};

EmpiricalStats empirical_stats(const SpinConfiguration& config, int depth);

// Per-site relative entropy of the window frequencies against the product
// measure with mean y; 0 log 0 = 0.
double relative_entropy_density_estimate(const EmpiricalStats& stats, double y);

struct EntropyEstimate {
  double value;
  double standard_error;
};

// Estimate plus a bootstrap standard error from resampled window positions.
EntropyEstimate relative_entropy_bootstrap(const SpinConfiguration& config, double y, int depth, int resamples,
                                           std::uint64_t seed);

}  // namespace ldpath::lattice
