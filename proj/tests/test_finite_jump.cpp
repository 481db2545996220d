#include <doctest.h>

#include <cmath>

#include "ldpath/error.hpp"
#include "ldpath/finite_jump.hpp"
#include "ldpath/magnetization.hpp"
#include "ldpath/random.hpp"

using namespace ldpath;
namespace fj = ldpath::finite_jump;
using fj::MatrixXd;
using fj::VectorXd;

namespace {

fj::JumpModel two_state(VectorXd c, VectorXd mu) {
  return {MatrixXd{{-2.0, 2.0}, {2.0, -2.0}}, std::move(c), std::move(mu)};
}

fj::JumpModel random_model(std::uint64_t seed, int n) {
  Rng rng(seed);
  fj::JumpModel m{MatrixXd::Zero(n, n), VectorXd(n), VectorXd(n)};
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b) m.D(a, b) = 4.0 * rng.uniform() - 2.0;
    }
    m.D(a, a) = -m.D.row(a).sum();
    m.c(a) = 0.5 + 1.5 * rng.uniform();
    m.mu(a) = 0.1 + rng.uniform();
  }
  m.mu /= m.mu.sum();
  return m;
}

// Grid maximization of the variational objective along the single
// non-constant direction of the two-state model.
double two_state_brute(const fj::JumpModel& m, const VectorXd& alpha) {
  double best = -kInf;
  for (int i = -200000; i <= 200000; ++i) {
    const double g = i * 2.5e-5;
    best = std::max(best, fj::variational_objective(m, VectorXd{{0.0, g}}, alpha));
  }
  return best;
}

}  // namespace

TEST_CASE("model validation") {
  auto bad = two_state(VectorXd::Ones(2), VectorXd{{0.6, 0.6}});
  CHECK_THROWS(bad.validate());
  auto rows = two_state(VectorXd::Ones(2), VectorXd{{0.5, 0.5}});
  rows.D(0, 0) = -1.0;
  CHECK_THROWS(rows.validate());
  auto rates = two_state(VectorXd{{1.0, 0.0}}, VectorXd{{0.5, 0.5}});
  CHECK_THROWS(rates.validate());
}

TEST_CASE("two-state values") {
  const VectorXd zero = VectorXd::Zero(2);
  CHECK(std::abs(fj::lagrangian_variational(two_state(VectorXd::Ones(2), VectorXd{{0.5, 0.5}}), zero)) <= 1e-12);

  const auto a = two_state(VectorXd::Ones(2), VectorXd{{0.75, 0.25}});
  const double va = fj::lagrangian_variational(a, zero);
  CHECK(va == doctest::Approx(1.0 - std::sqrt(0.75)).epsilon(1e-12));
  CHECK(va == doctest::Approx(two_state_brute(a, zero)).epsilon(1e-8));
  CHECK(std::abs(va - magnetization::lagrangian(0.5, 0.0)) <= 1e-8);
  const auto da = fj::lagrangian_dual(a, zero);
  CHECK(da.value == doctest::Approx(va).epsilon(1e-10));
  CHECK(da.nu(0) == doctest::Approx(std::sqrt(0.1875)).epsilon(1e-9));
  CHECK(da.nu(1) == doctest::Approx(std::sqrt(0.1875)).epsilon(1e-9));
  const double closed = fj::closed_form_lagrangian(a, zero);
  CHECK(closed == doctest::Approx(0.143841036225891).epsilon(1e-10));
  CHECK(closed - va > 0.009);

  const auto b = two_state(VectorXd{{2.0, 1.0}}, VectorXd{{0.5, 0.5}});
  CHECK(fj::lagrangian_variational(b, zero) == doctest::Approx(1.5 - std::sqrt(2.0)).epsilon(1e-12));
  const auto db = fj::lagrangian_dual(b, zero);
  CHECK(db.nu(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(db.nu.sum() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(b.c_mu() == doctest::Approx(1.5));

  const auto flat = two_state(VectorXd{{2.0, 2.0}}, VectorXd{{0.5, 0.5}});
  const auto dflat = fj::lagrangian_dual(flat, zero);
  CHECK(std::abs(dflat.value) <= 1e-12);
  CHECK((dflat.nu - flat.mu_c()).norm() <= 1e-10);
  CHECK(std::abs(fj::closed_form_lagrangian(two_state(VectorXd::Ones(2), VectorXd{{0.5, 0.5}}), zero)) <= 1e-14);
}

TEST_CASE("non-zero flux on two states") {
  const auto a = two_state(VectorXd::Ones(2), VectorXd{{0.75, 0.25}});
  const VectorXd alpha{{-0.4, 0.4}};
  const double v = fj::lagrangian_variational(a, alpha);
  CHECK(v == doctest::Approx(two_state_brute(a, alpha)).epsilon(1e-8));
  CHECK(v == doctest::Approx(fj::lagrangian_dual(a, alpha).value).epsilon(1e-9));
  CHECK_THROWS_WITH(fj::lagrangian_variational(a, VectorXd{{0.3, 0.3}}), doctest::Contains("NotInRange"));
}

TEST_CASE("gradient matches finite differences") {
  const auto m = random_model(5, 5);
  Rng rng(9);
  VectorXd f(5), alpha(5);
  for (int i = 0; i < 5; ++i) {
    f(i) = rng.uniform() - 0.5;
    alpha(i) = rng.uniform();
  }
  const VectorXd g = fj::variational_gradient(m, f, alpha);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    VectorXd up = f, down = f;
    up(i) += h;
    down(i) -= h;
    const double fd = (fj::variational_objective(m, up, alpha) - fj::variational_objective(m, down, alpha)) / (2 * h);
    CHECK(std::abs(g(i) - fd) <= 1e-6);
  }
}

TEST_CASE("strong duality and ordering on random models") {
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 5;
    const auto m = random_model(100 + trial, n);
    Rng rng(500 + trial);
    VectorXd nu0(n);
    for (int i = 0; i < n; ++i) nu0(i) = 0.1 + rng.uniform();
    const VectorXd alpha = m.D.transpose() * nu0;
    const double v = fj::lagrangian_variational(m, alpha);
    const auto d = fj::lagrangian_dual(m, alpha);
    CHECK(std::abs(v - d.value) <= 1e-7);
    CHECK((m.D.transpose() * d.nu - alpha).norm() <= 1e-9);
    CHECK(d.nu.minCoeff() > 0.0);
    try {
      const double closed = fj::closed_form_lagrangian(m, alpha);
      CHECK(closed >= d.value - 1e-9);
    } catch (const Error& e) {
      CHECK(e.kind() == "NotWellDefined");
    }
  }
}

TEST_CASE("closed form reduces to relative entropy and coincides with the dual at matching mass") {
  // Three-state cycle; alpha chosen from nu with total mass C_mu = 1.
  MatrixXd D{{-1.0, 1.0, 0.0}, {0.0, -1.0, 1.0}, {1.0, 0.0, -1.0}};
  fj::JumpModel m{D, VectorXd::Ones(3), VectorXd{{0.5, 0.3, 0.2}}};
  const VectorXd nu{{0.2, 0.5, 0.3}};
  const VectorXd alpha = D.transpose() * nu;
  const double closed = fj::closed_form_lagrangian(m, alpha);
  double kl = 0.0;
  for (int i = 0; i < 3; ++i) kl += nu(i) * std::log(nu(i) / m.mu(i));
  CHECK(closed == doctest::Approx(kl).epsilon(1e-10));
  CHECK(closed >= fj::lagrangian_dual(m, alpha).value - 1e-10);

  // A second kernel direction leaves a line of candidates.
  MatrixXd blocks = MatrixXd::Zero(4, 4);
  blocks.topLeftCorner(2, 2) = MatrixXd{{-1.0, 1.0}, {1.0, -1.0}};
  blocks.bottomRightCorner(2, 2) = MatrixXd{{-1.0, 1.0}, {1.0, -1.0}};
  fj::JumpModel split{blocks, VectorXd::Ones(4), VectorXd::Constant(4, 0.25)};
  CHECK_THROWS_WITH(fj::closed_form_lagrangian(split, VectorXd::Zero(4)), doctest::Contains("NotWellDefined"));
}

TEST_CASE("infeasible dual") {
  const auto a = two_state(VectorXd::Ones(2), VectorXd{{0.5, 0.5}});
  // D^T nu = (-2 nu0 + 2 nu1, 2 nu0 - 2 nu1) never has a nonzero constant component.
  CHECK_THROWS(fj::lagrangian_dual(a, VectorXd{{1.0, 1.0}}));
  MatrixXd D{{-1.0, 1.0}, {0.0, 0.0}};
  fj::JumpModel oneway{D, VectorXd::Ones(2), VectorXd{{0.5, 0.5}}};
  try {
    fj::lagrangian_dual(oneway, VectorXd{{1.0, -1.0}});
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == "Infeasible");
  }
}

TEST_CASE("product Lagrangian") {
  CHECK(fj::product_lagrangian(0.3, 0.3) == 0.0);
  CHECK(fj::product_lagrangian(0.0, 0.5) == doctest::Approx(0.143841036225891).epsilon(1e-12));
  CHECK(fj::product_lagrangian(-0.2, -0.7) == doctest::Approx(fj::product_lagrangian(0.2, 0.7)).epsilon(1e-14));
  CHECK(fj::product_lagrangian(0.5, 0.0) == doctest::Approx(0.130812035941137).epsilon(1e-12));
  for (double x = -0.9; x <= 0.9; x += 0.1) {
    for (double y = -0.9; y <= 0.9; y += 0.1) {
      CHECK(fj::product_lagrangian(x, y) >= magnetization::lagrangian(y, -2 * x) - 1e-12);
    }
  }
}
