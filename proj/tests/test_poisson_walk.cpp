#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ldpath/poisson_walk.hpp"
#include "ldpath/trajectory.hpp"

using namespace ldpath;
namespace pw = ldpath::poisson_walk;

namespace {

// Direct (linear-space) two-Poisson convolution for small means.
double direct_prob(double lb, double ld, long k) {
  double sum = 0.0;
  for (long j = std::max(0L, k); j < 400; ++j) {
    const long i = j - k;
    sum += std::exp(-lb - ld + j * std::log(lb) - std::lgamma(j + 1.0) + (i > 0 ? i * std::log(ld) : 0.0) -
                    std::lgamma(i + 1.0));
  }
  return sum;
}

}  // namespace

TEST_CASE("Hamiltonian values") {
  const pw::Params one{1.0, 1.0, 1};
  CHECK(pw::hamiltonian(0.0, {2.0, 1.0, 1}) == 0.0);
  CHECK(pw::hamiltonian(1.0, one) == doctest::Approx(1.08616126963049).epsilon(1e-13));
  CHECK(pw::hamiltonian_derivative(0.0, {2.0, 0.5, 1}) == doctest::Approx(1.5));
}

TEST_CASE("Lagrangian closed form against conjugation") {
  const pw::Params p{2.0, 1.0, 1};
  CHECK(pw::lagrangian(0.0, p) == doctest::Approx(3.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-13));
  CHECK(pw::lagrangian(0.5, p) == doctest::Approx(0.0423662291018145).epsilon(1e-12));
  CHECK(std::abs(pw::lagrangian(1.0, p)) <= 1e-15);
  CHECK(pw::lagrangian(2.0, p) == doctest::Approx(0.159709101227117).epsilon(1e-12));
  for (double a : {-3.0, -1.0, 0.0, 0.7, 2.5}) {
    CHECK(pw::lagrangian(a, p) == doctest::Approx(conjugate(pw::hamiltonian_function(p), a).value).epsilon(1e-9));
  }
}

TEST_CASE("pure-birth Lagrangian and the infinite branch") {
  const pw::Params p{1.0, 0.0, 1};
  CHECK(std::abs(pw::lagrangian(1.0, p)) <= 1e-15);
  CHECK(pw::lagrangian(0.0, p) == 1.0);
  CHECK(pw::lagrangian(-0.1, p) == kInf);
  CHECK(pw::lagrangian(3.0, p) == doctest::Approx(3.0 * std::log(3.0) - 2.0));
}

TEST_CASE("Lagrangian is nonnegative with its unique zero at the drift") {
  const pw::Params p{1.5, 0.4, 1};
  for (double a = -4.0; a <= 4.0; a += 0.01) {
    CHECK(pw::lagrangian(a, p) >= 0.0);
    if (std::abs(a - 1.1) > 0.02) CHECK(pw::lagrangian(a, p) > 0.0);
  }
  CHECK(std::abs(pw::lagrangian(1.1, p)) <= 1e-14);
}

TEST_CASE("Lagrangian derivatives match finite differences") {
  const pw::Params p{2.0, 1.0, 1};
  const double h = 1e-5;
  for (double a : {-1.0, 0.3, 1.0, 2.0}) {
    const double fd = (pw::lagrangian(a + h, p) - pw::lagrangian(a - h, p)) / (2 * h);
    CHECK(pw::lagrangian_derivative(a, p) == doctest::Approx(fd).epsilon(1e-8));
    const double fd2 = (pw::lagrangian_derivative(a + h, p) - pw::lagrangian_derivative(a - h, p)) / (2 * h);
    CHECK(pw::lagrangian_second_derivative(a, p) == doctest::Approx(fd2).epsilon(1e-7));
  }
}

TEST_CASE("conjugate pair duality gap") {
  const pw::Params p{2.0, 1.0, 1};
  const ScalarFamily H = [p](double) { return pw::hamiltonian_function(p); };
  const ScalarFamily L = [p](double) { return pw::lagrangian_function(p); };
  const std::vector<double> states{0.0};
  std::vector<double> slopes;
  for (double s = -2.0; s <= 2.0; s += 0.1) slopes.push_back(s);
  CHECK(duality_gap(H, L, states, slopes) <= 1e-8);
  CHECK(duality_gap(L, H, states, slopes) <= 1e-8);
}

TEST_CASE("exact log probability") {
  CHECK(pw::exact_log_prob({1.0, 0.0, 1}, 1.0, 0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(pw::exact_log_prob({1.0, 0.0, 1}, 1.0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(pw::exact_log_prob({1.0, 0.0, 1}, 1.0, -1) == -kInf);
  for (long k : {-5L, -1L, 0L, 2L, 7L}) {
    const double direct = std::log(direct_prob(3.0 * 1.5, 3.0 * 0.8, k));
    CHECK(pw::exact_log_prob({1.5, 0.8, 3}, 1.0, k) == doctest::Approx(direct).epsilon(1e-12));
  }
  // Bessel form: P(k) = e^{-(lb+ld)} (lb/ld)^{k/2} I_k(2 sqrt(lb ld)).
  const double lb = 20.0, ld = 10.0;
  const double bessel = -(lb + ld) + 0.5 * 4 * std::log(lb / ld) + std::log(std::cyl_bessel_i(4.0, 2.0 * std::sqrt(lb * ld)));
  CHECK(pw::exact_log_prob({2.0, 1.0, 10}, 1.0, 4) == doctest::Approx(bessel).epsilon(1e-11));
  // Probabilities sum to one.
  double total = 0.0;
  for (long k = -120; k <= 160; ++k) total += std::exp(pw::exact_log_prob({2.0, 1.0, 10}, 1.0, k));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("large-N oracle matches the rate") {
  const double rate = -pw::exact_log_prob({2.0, 1.0, 500}, 1.0, 500) / 500.0;
  CHECK(std::abs(rate - pw::lagrangian(1.0, {2.0, 1.0, 1})) <= 0.05);
}

TEST_CASE("rate convergence tables") {
  const std::vector<int> Ns{50, 100, 200, 500};
  const auto rows = pw::rate_convergence(2.0, 1.0, Ns, 1.0, 1.0);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(rows[i].gap) < std::abs(rows[i - 1].gap));
  CHECK(std::abs(rows.back().gap) <= 0.05);
  const auto flat = pw::rate_convergence(1.0, 1.0, Ns, 2.0, 0.0);
  for (const auto& r : flat) CHECK(std::abs(r.empirical_rate) <= std::log(r.N) / r.N);
  std::ostringstream out;
  pw::write_rate_csv(out, rows);
  CHECK(out.str().rfind("N,t,a,empirical_rate,analytic_rate,gap\n", 0) == 0);
}

TEST_CASE("simulation") {
  const auto path = pw::simulate({1.0, 0.0, 5}, 3.0, 42);
  for (std::size_t i = 1; i < path.values.size(); ++i) CHECK(path.values[i] > path.values[i - 1]);
  const auto again = pw::simulate({1.0, 0.0, 5}, 3.0, 42);
  CHECK(path.times == again.times);
  CHECK(path.values == again.values);

  const pw::Params p{2.0, 1.0, 4};
  const auto mean = pw::simulate_final_mean(p, 1.5, 10000, 7, 1);
  CHECK(std::abs(mean.mean - 1.5) <= 3.0 * mean.standard_error);
  const auto threaded = pw::simulate_final_mean(p, 1.5, 10000, 7, 3);
  CHECK(threaded.mean == mean.mean);
  CHECK(threaded.standard_error == mean.standard_error);
}

TEST_CASE("discrete action is additive and linear paths are optimal") {
  const pw::Params p{2.0, 1.0, 1};
  trajectory::Lagrangian L;
  L.value = [p](double, double q) { return pw::lagrangian(q, p); };
  const auto line = trajectory::TrajectoryGrid::sample(2.0, 40, [](double t) { return 0.3 * t; });
  const double whole = trajectory::action_integral(L, line);
  std::vector<double> a(line.values.begin(), line.values.begin() + 11);
  std::vector<double> b(line.values.begin() + 10, line.values.end());
  const double parts = trajectory::action_integral(L, {0.5, a}) + trajectory::action_integral(L, {1.5, b});
  CHECK(whole == doctest::Approx(parts).epsilon(1e-14));
  CHECK(whole == doctest::Approx(2.0 * pw::lagrangian(0.3, p)).epsilon(1e-13));

  trajectory::SolverOptions so;
  so.steps = 50;
  const auto best = trajectory::minimize_action_fixed(L, 0.0, 1.4, 2.0, so);
  CHECK(best.value == doctest::Approx(2.0 * pw::lagrangian(0.7, p)).epsilon(1e-9));
  for (int i = 0; i <= so.steps; ++i) CHECK(std::abs(best.path.values[i] - 0.7 * best.path.time(i)) <= 1e-5);
}
