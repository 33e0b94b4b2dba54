#include "netf/ddn.hpp"

#include <stdexcept>
#include <vector>

namespace netf {

namespace testing_hooks {
bool flip_mixed_hessian_sign = false;
}  // namespace testing_hooks

namespace {

double mixed_sign() { return testing_hooks::flip_mixed_hessian_sign ? 2.0 : -2.0; }

constexpr double kStationarityTol = 1e-6;

// Lower-triangle row order shared with EliminationMatrix.
std::vector<std::pair<Eigen::Index, Eigen::Index>> tri_rows(Eigen::Index C) {
  EliminationMatrix L(C);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  rows.reserve(static_cast<std::size_t>(L.rows()));
  for (Eigen::Index r = 0; r < L.rows(); ++r) rows.push_back(L.entryForRow(r));
  return rows;
}

Matrix hessian_block(const NearestEtfProblem& p) {
  const Matrix& M = p.M_tilde.matrix;
  return 2.0 * M * M + p.delta * Matrix::Identity(M.rows(), M.cols());
}

}  // namespace

Matrix constraint_jacobian(const StiefelPoint& U) {
  const Eigen::Index d = U.d(), C = U.C();
  auto rows = tri_rows(C);
  Matrix A = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), d * C);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto [i, j] = rows[r];
    // rvec of u_i e_j^T + u_j e_i^T (which is 2 u_i e_i^T on the diagonal)
    for (Eigen::Index k = 0; k < d; ++k) {
      A(static_cast<Eigen::Index>(r), k * C + j) += U.matrix()(k, i);
      A(static_cast<Eigen::Index>(r), k * C + i) += U.matrix()(k, j);
    }
  }
  return A;
}

Matrix mixed_hessian_dense(Eigen::Index d, const StandardEtf& M_tilde) {
  return kron(Matrix::Identity(d, d), mixed_sign() * M_tilde.matrix);
}

Matrix sigma_matrix(const StiefelPoint& U, const Matrix& euclidean_grad) {
  Matrix GtU = euclidean_grad.transpose() * U.matrix();
  return 0.5 * (GtU + GtU.transpose());
}

Matrix curvature_block(const NearestEtfProblem& p, const StiefelPoint& U,
                       const Matrix& euclidean_grad) {
  return hessian_block(p) - sigma_matrix(U, euclidean_grad);
}

Matrix curvature_G(const NearestEtfProblem& p, const StiefelPoint& U,
                   const Matrix& euclidean_grad) {
  return kron(Matrix::Identity(U.d(), U.d()), curvature_block(p, U, euclidean_grad));
}

Matrix curvature_G_lagrange(const NearestEtfProblem& p, const StiefelPoint& U,
                            const Matrix& euclidean_grad) {
  const Eigen::Index d = U.d(), C = U.C();
  Matrix A = constraint_jacobian(U);
  Vector lambda = (A * A.transpose()).ldlt().solve(A * rvec(euclidean_grad));
  Matrix G = kron(Matrix::Identity(d, d), hessian_block(p));
  auto rows = tri_rows(C);
  for (Eigen::Index r = 0; r < lambda.size(); ++r) {
    auto [i, j] = rows[static_cast<std::size_t>(r)];
    Matrix E = Matrix::Zero(C, C);
    E(i, j) += 1.0;
    E(j, i) += 1.0;
    G -= lambda[r] * kron(Matrix::Identity(d, d), E);
  }
  return G;
}

Matrix constraint_gram(const StiefelPoint& U) {
  const Eigen::Index C = U.C();
  std::vector<Matrix> grads;
  for (Eigen::Index s = 0; s < C; ++s) {
    Matrix g = Matrix::Zero(U.d(), C);
    g.col(s) = U.matrix().col(s);
    grads.push_back(std::move(g));
  }
  for (Eigen::Index q = 1; q < C; ++q) {
    for (Eigen::Index p = 0; p < q; ++p) {
      Matrix g = Matrix::Zero(U.d(), C);
      g.col(p) = U.matrix().col(q);
      g.col(q) = U.matrix().col(p);
      grads.push_back(std::move(g));
    }
  }
  const auto m = static_cast<Eigen::Index>(grads.size());
  Matrix gram(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      gram(a, b) = (grads[static_cast<std::size_t>(a)].array() *
                    grads[static_cast<std::size_t>(b)].array())
                       .sum();
  return gram;
}

ImplicitJacobian ImplicitJacobian::build(const NearestEtfProblem& p,
                                         const EtfSolution& solution) {
  ImplicitJacobian jac;
  jac.d_ = solution.U_star.d();
  jac.C_ = solution.U_star.C();
  jac.U_ = solution.U_star.matrix();
  jac.M_tilde_ = p.M_tilde.matrix;

  Matrix egrad = euclidean_gradient(p, jac.U_);
  double rg = riemannian_gradient(solution.U_star, egrad).matrix.norm();
  jac.stationary_ = rg <= kStationarityTol;

  // A A^T is exactly diag(4 on the norm rows, 2 on the inner-product rows)
  // at any orthonormal U, so full row rank of A is certified by the
  // feasibility residual the StiefelPoint already enforces.
  if (solution.U_star.feasibility() > 1e-8)
    throw std::runtime_error("ImplicitJacobian: constraint jacobian is rank deficient");

  Matrix Gc = curvature_block(p, solution.U_star, egrad);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Gc);
  const Vector& lam = eig.eigenvalues();
  double max_abs = lam.cwiseAbs().maxCoeff();
  if (lam.cwiseAbs().minCoeff() <= 1e-12 * max_abs)
    throw std::runtime_error(
        "ImplicitJacobian: G is singular; the implicit-differentiation "
        "non-singularity assumption fails at this solution");
  for (Eigen::Index a = 0; a < lam.size(); ++a)
    for (Eigen::Index b = a; b < lam.size(); ++b)
      if (std::abs(lam[a] + lam[b]) <= 2e-12 * max_abs)
        throw std::runtime_error("ImplicitJacobian: Schur system A G^-1 A^T is singular");
  jac.Q_ = eig.eigenvectors();
  jac.lam_ = lam;
  jac.lam_inv_ = lam.cwiseInverse();
  return jac;
}

Matrix ImplicitJacobian::applyGinv(const Matrix& X) const {
  return X * Q_ * lam_inv_.asDiagonal() * Q_.transpose();
}

Matrix ImplicitJacobian::applyB(const Matrix& X) const { return mixed_sign() * X * M_tilde_; }

// Solves Xi Gc^-1 + Gc^-1 Xi = Y for symmetric Xi in the eigenbasis of Gc;
// this is exactly the Schur system A G^-1 A^T written on symmetric matrices,
// because A^T takes Xi to rvec(U Xi) and A takes rvec(Z) to U^T Z + Z^T U.
Matrix ImplicitJacobian::schurSolve(const Matrix& Y) const {
  Matrix Yt = Q_.transpose() * Y * Q_;
  for (Eigen::Index a = 0; a < C_; ++a)
    for (Eigen::Index b = 0; b < C_; ++b) Yt(a, b) /= lam_inv_[a] + lam_inv_[b];
  return Q_ * Yt * Q_.transpose();
}

Matrix ImplicitJacobian::dyColumn(const Matrix& E) const {
  Matrix X1 = applyGinv(applyB(E));
  Matrix Y = U_.transpose() * X1 + X1.transpose() * U_;
  return applyGinv(U_ * schurSolve(Y)) - X1;
}

Matrix ImplicitJacobian::vjp(const Matrix& upstream) const {
  if (upstream.rows() != d_ || upstream.cols() != C_)
    throw std::invalid_argument("ImplicitJacobian::vjp: shape mismatch");
  // Dy^T v = B G^-1 (A^T S^-1 A G^-1 v - v), using the symmetry of B, G, S.
  Matrix X1 = applyGinv(upstream);
  Matrix Y = U_.transpose() * X1 + X1.transpose() * U_;
  Matrix Y1 = applyGinv(U_ * schurSolve(Y));
  return applyB(Y1 - X1);
}

Matrix ImplicitJacobian::dense() const {
  const Eigen::Index n = d_ * C_;
  Matrix Dy(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Matrix E = Matrix::Zero(d_, C_);
    E(k / C_, k % C_) = 1.0;
    Dy.col(k) = rvec(dyColumn(E));
  }
  return Dy;
}

}  // namespace netf
