#pragma once

#include <Eigen/Dense>

// Finite-dimensional Legendre computation for a linear "flip response"
// matrix D (zero row sums), rates c and a probability vector mu:
//   L(mu, alpha) = sup_f [ <f, alpha> - sum_i c_i mu_i (e^{(Df)_i} - 1) ].
namespace ldpath::finite_jump {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct JumpModel {
  MatrixXd D;
  VectorXd c;
  VectorXd mu;

  void validate() const;
  Eigen::Index size() const { return mu.size(); }
  double c_mu() const { return c.dot(mu); }
  VectorXd mu_c() const { return c.cwiseProduct(mu); }
};

double variational_objective(const JumpModel& model, const VectorXd& f, const VectorXd& alpha);
VectorXd variational_gradient(const JumpModel& model, const VectorXd& f, const VectorXd& alpha);

/// Supremum of the concave variational objective, maximized by damped Newton
/// ascent on the quotient by ker(D). Throws NotInRange when alpha has a
/// component outside range(D^T); returns +inf when the objective is unbounded.
double lagrangian_variational(const JumpModel& model, const VectorXd& alpha);

struct DualResult {
  double value;
  VectorXd nu;
};

/// min over nu >= 0 with D^T nu = alpha of sum_i [nu_i log(nu_i / w_i) - nu_i + w_i],
/// w = c * mu, solved by infeasible-start Newton on the equality-constrained
/// entropy program. Throws Infeasible when no positive solution exists.
DualResult lagrangian_dual(const JumpModel& model, const VectorXd& alpha);

/// sum_i nu_i log(nu_i / w_i) for the unique nu >= 0 with D^T nu = alpha and
/// total mass sum_i c_i mu_i. Throws NotWellDefined when that nu is missing or
/// not unique. Equals the dual value only when the dual minimizer happens to
/// carry that total mass.
double closed_form_lagrangian(const JumpModel& model, const VectorXd& alpha);

// Relative entropy of the Bernoulli(+1 w.p. (1+x)/2) law against (1+y)/2.
double product_lagrangian(double x, double y);

}  // namespace ldpath::finite_jump
