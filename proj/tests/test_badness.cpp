#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "ldpath/badness.hpp"
#include "ldpath/finite_jump.hpp"
#include "ldpath/magnetization.hpp"

using namespace ldpath;
using namespace ldpath::badness;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
  return g;
}

}  // namespace

TEST_CASE("rate function families") {
  const auto b = RateFunctionSpec::bernoulli(0.5);
  for (double m : {-0.9, -0.2, 0.5, 0.8}) CHECK(b(m) == doctest::Approx(finite_jump::product_lagrangian(m, 0.5)));
  REQUIRE(b.minimizers().size() == 1);
  CHECK(b.minimizers()[0] == 0.5);

  const auto w = RateFunctionSpec::double_well(1.5);
  REQUIRE(w.minimizers().size() == 2);
  const double mb = w.minimizers()[1];
  CHECK(std::atanh(mb) == doctest::Approx(1.5 * mb).epsilon(1e-12));
  CHECK(w.minimizers()[0] == doctest::Approx(-mb));
  CHECK(std::abs(w(mb)) <= 1e-14);
  for (double m = -0.99; m <= 0.99; m += 0.01) {
    CHECK(w(m) >= -1e-14);
    CHECK(w(m) == doctest::Approx(w(-m)).epsilon(1e-12));
  }
  const double h = 1e-6;
  for (double m : {-0.7, 0.1, 0.6}) {
    CHECK(w.derivative(m) == doctest::Approx((w(m + h) - w(m - h)) / (2 * h)).epsilon(1e-7));
    CHECK(b.derivative(m) == doctest::Approx((b(m + h) - b(m - h)) / (2 * h)).epsilon(1e-7));
  }

  const auto t = RateFunctionSpec::tabulated({-0.5, 0.0, 0.5}, {1.0, 0.5, 2.0});
  CHECK(t(0.0) == 0.0);
  CHECK(t(-0.25) == doctest::Approx(0.25));
  CHECK(t(0.6) == kInf);
  CHECK(t.derivative(0.25) == doctest::Approx(3.0));
  CHECK_THROWS(RateFunctionSpec::tabulated({0.0, -0.5}, {1.0, 2.0}));
}

TEST_CASE("transition costs") {
  const auto L = magnetization::lagrangian_model();
  CHECK(std::abs(transition_cost(L, 0.6, 0.6 * std::exp(-1.0), 0.5)) <= 1e-10);
  trajectory::SolverOptions so;
  const double k = transition_cost(L, 0.5, 0.0, 1.0, so);
  CHECK(k == trajectory::minimize_action_fixed(L, 0.5, 0.0, 1.0, so).value);
  double previous = transition_cost(L, 0.2, -0.3, 0.7);
  for (double mT = -0.29; mT <= 0.5; mT += 0.01) {
    const double v = transition_cost(L, 0.2, mT, 0.7);
    CHECK(v >= 0.0);
    CHECK(std::abs(v - previous) <= 0.1);
    previous = v;
  }
}

TEST_CASE("optimal initial points") {
  const double T = 0.6;
  const auto single = optimal_initials(RateFunctionSpec::bernoulli(0.5), 0.5 * std::exp(-2 * T), T);
  REQUIRE(single.size() == 1);
  CHECK(single[0].gamma0 == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(std::abs(single[0].cost) <= 1e-9);

  const auto well = RateFunctionSpec::double_well(1.5);
  const auto pair = optimal_initials(well, 0.0, 3.0);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].gamma0 == doctest::Approx(-pair[1].gamma0).epsilon(1e-6));
  CHECK(pair[1].gamma0 > 0.0);
  CHECK(std::abs(pair[0].cost - pair[1].cost) <= 1e-5);

  const auto short_time = optimal_initials(well, 0.0, 0.01);
  REQUIRE(short_time.size() == 1);
  CHECK(std::abs(short_time[0].gamma0) <= 1e-6);
}

TEST_CASE("badness detection") {
  const auto well = RateFunctionSpec::double_well(1.5);
  const auto v = is_bad(well, 0.0, 3.0);
  CHECK(v.bad);
  REQUIRE(v.plus_branch.size() == 5);
  REQUIRE(v.minus_branch.size() == 5);
  for (double g : v.plus_branch) CHECK(g > 0.1);
  for (double g : v.minus_branch) CHECK(g < -0.1);

  CHECK_FALSE(is_bad(well, 0.0, 0.01).bad);
  const auto bern = RateFunctionSpec::bernoulli(0.5);
  for (double T : {0.1, 1.0, 3.0}) {
    for (double mT : {-0.6, 0.0, 0.4}) CHECK_FALSE(is_bad(bern, mT, T).bad);
  }
}

TEST_CASE("nature and nurture") {
  const auto well = RateFunctionSpec::double_well(1.5);
  CHECK(nature_nurture_classify(well, 0.0, 0.02).label == Label::nature);
  CHECK(nature_nurture_classify(well, 0.0, 3.0).label == Label::nurture);
  const auto c = nature_nurture_classify(well, 0.0, 3.0);
  CHECK(c.d_nature.size() == 2);
  CHECK(c.d_nurture[0] < 0.05);
  CHECK(std::string(label_name(Label::mixed)) == "mixed");

  // Sign of d_nature - d_nurture along T changes once (measured on this grid).
  int changes = 0;
  double previous_sign = 0.0;
  for (double T : log_grid(0.02, 3.0, 30)) {
    const auto cl = nature_nurture_classify(well, 0.0, T);
    REQUIRE(!cl.d_nature.empty());
    const double s = cl.d_nature.back() - cl.d_nurture.back() < 0.0 ? -1.0 : 1.0;
    if (previous_sign != 0.0 && s != previous_sign) ++changes;
    previous_sign = s;
  }
  CHECK(changes == 1);
}

TEST_CASE("scans") {
  const auto well = RateFunctionSpec::double_well(1.5);
  BadnessOptions opts;
  const std::vector<double> none;
  CHECK(badness_scan(well, none, none, opts, 1, 1).cells.empty());

  const auto Ts = log_grid(0.05, 3.0, 8);
  const std::vector<double> mTs{-0.1, 0.0, 0.1};
  const auto a = badness_scan(well, Ts, mTs, opts, 3, 1);
  const auto b = badness_scan(well, Ts, mTs, opts, 3, 3);
  std::ostringstream sa, sb;
  write_scan_csv(sa, a);
  write_scan_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("T,mT,n_minimizers,gamma0_list,cost,bad,label,d_nature,d_nurture\n", 0) == 0);

  bool seen_bad = false;
  for (const auto& cell : a.cells) {
    CHECK(cell.error.empty());
    CHECK(cell.minimizers.size() >= 1);
    if (cell.minimizers.size() == 1) CHECK_FALSE(cell.bad);
    for (const auto& m : cell.minimizers) CHECK(m.cost - cell.cost <= 1e-5);
    if (cell.mT == 0.0) {
      if (seen_bad) CHECK(cell.bad);
      seen_bad = seen_bad || cell.bad;
      // Symmetric minimizer set for the even rate function.
      for (std::size_t i = 0; i < cell.minimizers.size(); ++i) {
        CHECK(cell.minimizers[i].gamma0 ==
              doctest::Approx(-cell.minimizers[cell.minimizers.size() - 1 - i].gamma0).epsilon(1e-6));
      }
    }
  }
  CHECK(seen_bad);
}
