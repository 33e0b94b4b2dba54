#pragma once

#include "netf/nearest_etf.hpp"

namespace netf {

namespace testing_hooks {
// Flips the sign of the mixed second derivative. Exists so the validation
// battery can demonstrate that its finite-difference check detects a
// corrupted derivative; never set outside tests.
extern bool flip_mixed_hessian_sign;
}  // namespace testing_hooks

// A = rvech(D_U J) = L_C (K_CC + I) (U (x) I_C)^T, shape C(C+1)/2 x dC.
// Row (i, j), i >= j in the elimination-matrix order; acting on rvec(Z) it
// yields the lower triangle of U^T Z + Z^T U.
Matrix constraint_jacobian(const StiefelPoint& U);

// Constant mixed second derivative of the objective w.r.t. (H~, U) in rvec
// layout: -2 (I_d (x) M~). Kronecker-structured; dense form for tests only.
Matrix mixed_hessian_dense(Eigen::Index d, const StandardEtf& M_tilde);

// Sigma(U) = sym(grad f(U)^T U); its entries are the Lagrange multiplier
// functions sigma_s (diagonal) and sigma_pq (off-diagonal).
Matrix sigma_matrix(const StiefelPoint& U, const Matrix& euclidean_grad);

// C x C block of G = I_d (x) Gc: the objective Hessian block 2 M~^2 +
// delta I_C minus Sigma(U).
Matrix curvature_block(const NearestEtfProblem& p, const StiefelPoint& U,
                       const Matrix& euclidean_grad);

// Dense G via the embedded-gradient-field route (tests, dC <= 256).
Matrix curvature_G(const NearestEtfProblem& p, const StiefelPoint& U,
                   const Matrix& euclidean_grad);

// Dense G via the explicit Lagrange-system route: solve A^T lambda =
// rvec(grad f) in least squares and contract the multipliers with the
// constraint Hessian blocks I_d (x) (e_i e_j^T + e_j e_i^T).
Matrix curvature_G_lagrange(const NearestEtfProblem& p, const StiefelPoint& U,
                            const Matrix& euclidean_grad);

// Gram matrix of the Stiefel constraint gradients (j_s = ||u_s||^2 / 2,
// j_pq = <u_p, u_q>); its determinant is 2^{C(C-1)/2} at manifold points.
Matrix constraint_gram(const StiefelPoint& U);

// Sensitivity of the argmin map H~ -> U* via the implicit function theorem
// on the KKT system. G = I_d (x) Gc is never inverted densely, and neither is
// the Schur system A G^-1 A^T: with orthonormal U it reduces to the Lyapunov
// map Xi -> Xi Gc^-1 + Gc^-1 Xi on symmetric C x C matrices, solved in the
// eigenbasis of Gc.
class ImplicitJacobian {
 public:
  // Throws when rank(A) < C(C+1)/2 or G / the Schur system is singular.
  // When the solution is not stationary to tol 1e-6 the jacobian is still
  // built but flagged.
  static ImplicitJacobian build(const NearestEtfProblem& p, const EtfSolution& solution);

  // rvec^-1(Dy^T rvec(upstream)): gradient w.r.t. H~ of any scalar given its
  // gradient w.r.t. U*.
  Matrix vjp(const Matrix& upstream) const;

  // Dense dC x dC Dy for tests (dC <= 256).
  Matrix dense() const;

  Eigen::Index d() const { return d_; }
  Eigen::Index C() const { return C_; }
  bool stationary() const { return stationary_; }

 private:
  ImplicitJacobian() = default;

  Matrix applyGinv(const Matrix& X) const;   // unrvec(G^-1 rvec(X))
  Matrix applyB(const Matrix& X) const;      // unrvec(B rvec(X)); B symmetric
  Matrix schurSolve(const Matrix& Y) const;  // Xi: Xi Gc^-1 + Gc^-1 Xi = Y
  Matrix dyColumn(const Matrix& E) const;    // Dy rvec(E), unrvec'd

  Eigen::Index d_ = 0, C_ = 0;
  Matrix U_;
  Matrix M_tilde_;
  Matrix Q_;        // eigenvectors of Gc
  Vector lam_;      // eigenvalues of Gc
  Vector lam_inv_;
  bool stationary_ = true;
};

}  // namespace netf
