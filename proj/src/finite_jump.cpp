#include "ldpath/finite_jump.hpp"

#include <cmath>

#include "ldpath/error.hpp"

namespace ldpath::finite_jump {

void JumpModel::validate() const {
  const Eigen::Index n = mu.size();
  if (n < 1 || D.rows() != n || D.cols() != n || c.size() != n) {
    throw Error("InvalidModel", "D must be n x n with c and mu of length n");
  }
  const double scale = 1.0 + D.cwiseAbs().maxCoeff();
  if ((D * VectorXd::Ones(n)).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error("InvalidModel", "rows of D must sum to zero");
  }
  if (!(c.minCoeff() > 0.0)) throw Error("InvalidModel", "rates c must be positive");
  if (!(mu.minCoeff() > 0.0)) throw Error("InvalidModel", "mu must be strictly positive");
  if (std::abs(mu.sum() - 1.0) > 1e-12) throw Error("InvalidModel", "mu must sum to 1");
}

double variational_objective(const JumpModel& model, const VectorXd& f, const VectorXd& alpha) {
  const VectorXd df = model.D * f;
  double penalty = 0.0;
  for (Eigen::Index i = 0; i < df.size(); ++i) penalty += model.c[i] * model.mu[i] * std::expm1(df[i]);
  return f.dot(alpha) - penalty;
}

VectorXd variational_gradient(const JumpModel& model, const VectorXd& f, const VectorXd& alpha) {
  const VectorXd flux = model.mu_c().cwiseProduct((model.D * f).array().exp().matrix());
  return alpha - model.D.transpose() * flux;
}

namespace {

void require_in_range(const JumpModel& model, const VectorXd& alpha) {
  if (alpha.size() != model.size()) throw Error("InvalidModel", "alpha has the wrong length");
  const MatrixXd dt = model.D.transpose();
  const VectorXd y = dt.completeOrthogonalDecomposition().solve(alpha);
  const double residual = (dt * y - alpha).norm();
  if (residual > 1e-10 * (1.0 + alpha.norm())) {
    throw Error("NotInRange", "alpha is not in the range of D^T (residual " + std::to_string(residual) + ")");
  }
}

double entropy_term(double nu, double w) { return nu > 0.0 ? nu * std::log(nu / w) : 0.0; }

}  // namespace

double lagrangian_variational(const JumpModel& model, const VectorXd& alpha) {
  model.validate();
  require_in_range(model, alpha);
  const Eigen::Index n = model.size();
  const VectorXd w = model.mu_c();
  VectorXd f = VectorXd::Zero(n);
  double value = variational_objective(model, f, alpha);
  for (int it = 0; it < 500; ++it) {
    const VectorXd grad = variational_gradient(model, f, alpha);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + alpha.lpNorm<Eigen::Infinity>() + w.sum())) break;
    const VectorXd weight = w.cwiseProduct((model.D * f).array().exp().matrix());
    const MatrixXd hess = model.D.transpose() * weight.asDiagonal() * model.D;
    VectorXd step = hess.completeOrthogonalDecomposition().solve(grad);
    double slope = grad.dot(step);
    if (!(slope > 0.0) || !step.allFinite()) {
      step = grad;
      slope = grad.squaredNorm();
    }
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const VectorXd trial = f + t * step;
      const double v = variational_objective(model, trial, alpha);
      if (std::isfinite(v) && v >= value + 1e-4 * t * slope) {
        f = trial;
        accepted = v > value || t == 1.0;
        value = v;
        break;
      }
    }
    if (!accepted) break;
    if (f.norm() > 1e8 || value > 1e12) return kInf;
  }
  return value;
}

DualResult lagrangian_dual(const JumpModel& model, const VectorXd& alpha) {
  model.validate();
  require_in_range(model, alpha);
  const Eigen::Index n = model.size();
  const VectorXd w = model.mu_c();

  // Orthonormal basis of range(D^T) turns D^T nu = alpha into a full-row-rank
  // system A nu = b.
  const MatrixXd dt = model.D.transpose();
  Eigen::JacobiSVD<MatrixXd> svd(dt, Eigen::ComputeFullU);
  const double tol = 1e-12 * std::max(1.0, svd.singularValues().maxCoeff());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()[i] > tol ? 1 : 0;
  if (rank == 0) return {0.0, w};  // D = 0 forces alpha = 0 and nu = w
  const MatrixXd Q = svd.matrixU().leftCols(rank);
  const MatrixXd A = Q.transpose() * dt;
  const VectorXd b = Q.transpose() * alpha;

  VectorXd nu = w;
  VectorXd y = VectorXd::Zero(rank);
  auto residual_norm = [&](const VectorXd& v, const VectorXd& dual) {
    VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = std::log(v[i] / w[i]);
    return std::sqrt((g + A.transpose() * dual).squaredNorm() + (A * v - b).squaredNorm());
  };
  double res = residual_norm(nu, y);
  const double scale = 1.0 + b.norm() + w.sum();
  bool converged = false;
  for (int it = 0; it < 300; ++it) {
    if (res < 1e-13 * scale) {
      converged = true;
      break;
    }
    VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = std::log(nu[i] / w[i]);
    const MatrixXd S = A * nu.asDiagonal() * A.transpose();
    const VectorXd rhs = -(b - A * nu) - A * nu.cwiseProduct(g);
    const VectorXd y_new = S.ldlt().solve(rhs);
    const VectorXd dnu = -nu.cwiseProduct(g + A.transpose() * y_new);
    const VectorXd dy = y_new - y;
    double t = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dnu[i] < 0.0) t = std::min(t, -0.99 * nu[i] / dnu[i]);
    }
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
      const VectorXd trial = nu + t * dnu;
      if (trial.minCoeff() <= 0.0) continue;
      const VectorXd trial_y = y + t * dy;
      const double r = residual_norm(trial, trial_y);
      if (std::isfinite(r) && r <= (1.0 - 0.01 * t) * res) {
        nu = trial;
        y = trial_y;
        res = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!converged || (A * nu - b).norm() > 1e-9 * scale) {
    throw Error("Infeasible", "no positive nu with D^T nu = alpha");
  }
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) value += entropy_term(nu[i], w[i]) - nu[i] + w[i];
  return {value, nu};
}

double closed_form_lagrangian(const JumpModel& model, const VectorXd& alpha) {
  model.validate();
  if (alpha.size() != model.size()) throw Error("InvalidModel", "alpha has the wrong length");
  const Eigen::Index n = model.size();
  MatrixXd M(n + 1, n);
  M.topRows(n) = model.D.transpose();
  M.row(n).setOnes();
  VectorXd rhs(n + 1);
  rhs.head(n) = alpha;
  rhs[n] = model.c_mu();
  const auto cod = M.completeOrthogonalDecomposition();
  if (cod.rank() < n) throw Error("NotWellDefined", "preimage with the prescribed mass is not unique");
  const VectorXd nu = cod.solve(rhs);
  if ((M * nu - rhs).norm() > 1e-10 * (1.0 + rhs.norm())) {
    throw Error("NotWellDefined", "no preimage with the prescribed mass");
  }
  if (nu.minCoeff() < -1e-12) throw Error("NotWellDefined", "preimage has negative entries");
  const VectorXd w = model.mu_c();
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) value += entropy_term(std::max(nu[i], 0.0), w[i]);
  return value;
}

double product_lagrangian(double x, double y) {
  if (!(std::abs(x) <= 1.0) || !(std::abs(y) < 1.0)) throw Error("DomainError", "need |x| <= 1 and |y| < 1");
  auto part = [](double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; };
  return part(0.5 * (1.0 + x), 0.5 * (1.0 + y)) + part(0.5 * (1.0 - x), 0.5 * (1.0 - y));
}

}  // namespace ldpath::finite_jump
