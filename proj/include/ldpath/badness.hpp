#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ldpath/rate_function.hpp"
#include "ldpath/trajectory.hpp"

// Bad endpoints of the conditioned magnetization dynamics: endpoints mT whose
// optimal histories start from two or more distinct initial magnetizations.
namespace ldpath::badness {

struct BadnessOptions {
  trajectory::Lagrangian lagrangian;  // defaults to the independent-flip magnetization model
  trajectory::OpenStartOptions open;
  double epsilon = 0.05;      // minimal separation of the two selected histories
  double delta = 0.05;        // largest endpoint perturbation
  int perturbation_levels = 5;  // endpoints mT ± delta 2^{-n}, n < levels
  double dead_band = 0.2;     // nature/nurture tie width (10% of [-1, 1])

  BadnessOptions();
};

// K_T(m_start, m_end): least action over fixed-endpoint paths.
double transition_cost(const trajectory::Lagrangian& lagrangian, double m_start, double m_end, double T,
                       const trajectory::SolverOptions& opts = {});

struct InitialPoint {
  double gamma0;
  double cost;  // I(gamma0) + K_T(gamma0, mT)
};

// Cluster set of minimizers of m' -> I(m') + K_T(m', mT), sorted by gamma0.
std::vector<InitialPoint> optimal_initials(const RateFunctionSpec& rate, double mT, double T,
                                           const BadnessOptions& opts = {});

struct BadnessVerdict {
  bool bad = false;
  std::vector<InitialPoint> minimizers;
  std::vector<double> plus_branch;   // selected gamma0 for mT + delta 2^{-n}
  std::vector<double> minus_branch;  // selected gamma0 for mT - delta 2^{-n}
  std::string diagnostic;
};

BadnessVerdict is_bad(const RateFunctionSpec& rate, double mT, double T, const BadnessOptions& opts = {});

enum class Label { nature, nurture, mixed };
const char* label_name(Label label);

struct Classification {
  Label label = Label::mixed;
  std::vector<Label> labels;      // per minimizer
  std::vector<double> d_nature;   // |gamma0 - mT e^{2T}|
  std::vector<double> d_nurture;  // distance to the nearest minimizer of I
};

Classification nature_nurture_classify(const RateFunctionSpec& rate, double mT, double T,
                                       std::span<const InitialPoint> minimizers, double dead_band = 0.2);
Classification nature_nurture_classify(const RateFunctionSpec& rate, double mT, double T,
                                       const BadnessOptions& opts = {});

struct ScanCell {
  double T = 0.0;
  double mT = 0.0;
  std::vector<InitialPoint> minimizers;
  double cost = 0.0;
  bool bad = false;
  Label label = Label::mixed;
  double d_nature = 0.0;
  double d_nurture = 0.0;
  std::string branch_diagnostic;
  std::string error;  // non-empty if the cell failed
};

struct BadnessScanResult {
  std::vector<ScanCell> cells;  // T-major order
};

BadnessScanResult badness_scan(const RateFunctionSpec& rate, std::span<const double> Ts, std::span<const double> mTs,
                               const BadnessOptions& opts, std::uint64_t seed, unsigned workers);

void write_scan_csv(std::ostream& out, const BadnessScanResult& result);

}  // namespace ldpath::badness
