#include "netf/stiefel.hpp"

#include <cmath>
#include <stdexcept>

namespace netf {

StiefelPoint StiefelPoint::from(Matrix U) {
  StiefelPoint p(std::move(U));
  if (p.feasibility() > kStiefelFeasTol)
    throw std::invalid_argument("StiefelPoint: columns not orthonormal, residual " +
                                std::to_string(p.feasibility()));
  return p;
}

StiefelPoint StiefelPoint::project(const Matrix& X) {
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return StiefelPoint(svd.matrixU() * svd.matrixV().transpose());
}

StiefelPoint StiefelPoint::canonical(Eigen::Index d, Eigen::Index C) {
  if (d < C) throw std::invalid_argument("StiefelPoint::canonical: d >= C required");
  Matrix U = Matrix::Zero(d, C);
  U.topRows(C) = Matrix::Identity(C, C);
  return StiefelPoint(std::move(U));
}

double StiefelPoint::feasibility() const {
  return (U_.transpose() * U_ - Matrix::Identity(C(), C())).norm();
}

TangentVector project_to_tangent(const StiefelPoint& U, const Matrix& Z) {
  if (Z.rows() != U.d() || Z.cols() != U.C())
    throw std::invalid_argument("project_to_tangent: shape mismatch");
  Matrix UtZ = U.matrix().transpose() * Z;
  return {Z - U.matrix() * (0.5 * (UtZ + UtZ.transpose()))};
}

StiefelPoint retract(const StiefelPoint& U, const Matrix& Z) {
  Matrix X = U.matrix() + Z;
  Eigen::HouseholderQR<Matrix> qr(X);
  Matrix Q = qr.householderQ() * Matrix::Identity(U.d(), U.C());
  Matrix R = qr.matrixQR().topRows(U.C()).triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < U.C(); ++k) {
    if (R(k, k) == 0.0) throw std::runtime_error("retract: rank collapse in QR factorisation");
    if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
  }
  return StiefelPoint::from(std::move(Q));
}

TangentVector riemannian_gradient(const StiefelPoint& U, const Matrix& euclidean_grad) {
  if (euclidean_grad.rows() != U.d() || euclidean_grad.cols() != U.C())
    throw std::invalid_argument("riemannian_gradient: shape mismatch");
  Matrix GtU = euclidean_grad.transpose() * U.matrix();
  Matrix Sigma = 0.5 * (GtU + GtU.transpose());
  return {euclidean_grad - U.matrix() * Sigma};
}

namespace {

// Riemannian gradient evaluated at an off-manifold perturbation and pulled
// back to the tangent space at the base point.
Matrix gradient_field(const Matrix& X, const GradientFn& egrad) {
  Matrix g = egrad(X);
  Matrix GtX = g.transpose() * X;
  return g - X * (0.5 * (GtX + GtX.transpose()));
}

}  // namespace

SolveReport TrustRegionSolver::minimize(const ObjectiveFn& f, const GradientFn& egrad,
                                        const StiefelPoint& U_init) const {
  const Eigen::Index d = U_init.d();
  const Eigen::Index C = U_init.C();
  const double max_radius =
      opts_.max_radius > 0.0 ? opts_.max_radius : std::sqrt(static_cast<double>(C));
  const int tcg_cap = opts_.tcg_max_iter > 0 ? opts_.tcg_max_iter : static_cast<int>(2 * d * C);

  StiefelPoint U = U_init;
  double fval = f(U.matrix());
  if (!std::isfinite(fval)) throw std::runtime_error("trust region: non-finite objective");

  double radius = opts_.initial_radius;
  SolveReport report;

  auto hess_action = [&](const StiefelPoint& base, const Matrix& rg,
                         const Matrix& Z) -> Matrix {
    double h = 1e-7 * (1.0 + base.matrix().norm());
    Matrix g_plus = gradient_field(base.matrix() + h * Z, egrad);
    return project_to_tangent(base, (g_plus - rg) / h).matrix;
  };

  for (int iter = 0; iter < opts_.max_iter; ++iter) {
    Matrix rg = riemannian_gradient(U, egrad(U.matrix())).matrix;
    double gnorm = rg.norm();
    report.iterations = iter;
    report.riemannian_grad_norm = gnorm;
    if (gnorm <= opts_.tol) {
      report.converged = true;
      break;
    }

    // Steihaug-Toint truncated CG on the tangent space.
    Matrix step = Matrix::Zero(d, C);
    Matrix r = rg;
    Matrix p = -r;
    double r2 = r.squaredNorm();
    const double inner_tol = std::min(0.5, std::sqrt(gnorm)) * gnorm;
    // The finite-difference Hessian floors the attainable residual near
    // h * ||p||; once the residual stalls there, further CG iterations only
    // circulate noise.
    double best_res = std::sqrt(r2);
    int best_iter = 0;
    for (int k = 0; k < tcg_cap; ++k) {
      Matrix Hp = hess_action(U, rg, p);
      double pHp = (p.array() * Hp.array()).sum();
      if (pHp <= 0.0) {
        // negative curvature: go to the boundary
        double a = p.squaredNorm();
        double b = 2.0 * (step.array() * p.array()).sum();
        double c = step.squaredNorm() - radius * radius;
        double t = (-b + std::sqrt(std::max(0.0, b * b - 4 * a * c))) / (2 * a);
        step += t * p;
        break;
      }
      double alpha = r2 / pHp;
      Matrix step_next = step + alpha * p;
      if (step_next.norm() >= radius) {
        double a = p.squaredNorm();
        double b = 2.0 * (step.array() * p.array()).sum();
        double c = step.squaredNorm() - radius * radius;
        double t = (-b + std::sqrt(std::max(0.0, b * b - 4 * a * c))) / (2 * a);
        step += t * p;
        break;
      }
      step = std::move(step_next);
      r += alpha * Hp;
      double r2_next = r.squaredNorm();
      double res_next = std::sqrt(r2_next);
      if (res_next <= inner_tol) break;
      if (res_next < 0.9 * best_res) {
        best_res = res_next;
        best_iter = k;
      } else if (k - best_iter >= 50) {
        break;
      }
      p = -r + (r2_next / r2) * p;
      r2 = r2_next;
    }

    // Predicted decrease under the quadratic model.
    Matrix Hs = hess_action(U, rg, step);
    double pred = -((rg.array() * step.array()).sum() + 0.5 * (step.array() * Hs.array()).sum());

    StiefelPoint U_try = retract(U, step);
    double f_try = f(U_try.matrix());
    if (!std::isfinite(f_try)) throw std::runtime_error("trust region: non-finite objective");
    double actual = fval - f_try;
    double rho = pred > 0.0 ? actual / pred : -1.0;

    if (rho < 0.25)
      radius *= 0.25;
    else if (rho > 0.75 && step.norm() >= 0.99 * radius)
      radius = std::min(2.0 * radius, max_radius);

    if (rho > opts_.accept_ratio && actual >= 0.0) {
      U = std::move(U_try);
      fval = f_try;
    }
  }

  report.solution = U.matrix();
  report.objective_value = fval;
  if (!report.converged) {
    Matrix rg = riemannian_gradient(U, egrad(U.matrix())).matrix;
    report.riemannian_grad_norm = rg.norm();
    report.converged = report.riemannian_grad_norm <= opts_.tol;
    report.iterations = opts_.max_iter;
  }
  return report;
}

ProcrustesResult procrustes_oracle(const Matrix& G) {
  if (G.norm() == 0.0) throw std::invalid_argument("procrustes_oracle: zero input");
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  bool unique = sv(sv.size() - 1) > 1e-12 * sv(0);
  Matrix U = svd.matrixU() * svd.matrixV().transpose();
  return {StiefelPoint::from(std::move(U)), unique};
}

}  // namespace netf
