#pragma once

#include <Eigen/Dense>
#include <functional>

#include "netf/linalg.hpp"

namespace netf {

constexpr double kStiefelFeasTol = 1e-10;

// d x C matrix with orthonormal columns. The residual ||U^T U - I||_F is
// checked on construction and after every retraction.
class StiefelPoint {
 public:
  static StiefelPoint from(Matrix U);
  // Nearest orthonormal matrix (polar factor) of an arbitrary full-rank input.
  static StiefelPoint project(const Matrix& X);
  static StiefelPoint canonical(Eigen::Index d, Eigen::Index C);

  const Matrix& matrix() const { return U_; }
  Eigen::Index d() const { return U_.rows(); }
  Eigen::Index C() const { return U_.cols(); }
  double feasibility() const;

 private:
  explicit StiefelPoint(Matrix U) : U_(std::move(U)) {}
  Matrix U_;
};

struct TangentVector {
  Matrix matrix;  // d x C, satisfies U^T Z + Z^T U = 0 at its base point
};

// Z - U sym(U^T Z); on the Stiefel manifold this is the orthogonal projector
// onto the tangent space at U.
TangentVector project_to_tangent(const StiefelPoint& U, const Matrix& Z);

// Thin-QR retraction with the diagonal of R forced positive.
StiefelPoint retract(const StiefelPoint& U, const Matrix& Z);

// grad f(U) - U Sigma(U) with Sigma(U) = sym(grad f(U)^T U).
TangentVector riemannian_gradient(const StiefelPoint& U, const Matrix& euclidean_grad);

struct SolveReport {
  Matrix solution;
  double objective_value = 0.0;
  double riemannian_grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct TrustRegionOptions {
  double tol = 1e-8;          // Riemannian gradient norm
  int max_iter = 200;
  double initial_radius = 1.0;
  double max_radius = 0.0;    // 0 -> sqrt(C)
  double accept_ratio = 0.1;
  int tcg_max_iter = 0;       // 0 -> 2*d*C
};

using ObjectiveFn = std::function<double(const Matrix&)>;
using GradientFn = std::function<Matrix(const Matrix&)>;

// Riemannian trust-region minimiser with a Steihaug-Toint truncated CG inner
// solve. The Hessian action is a finite difference of the Riemannian
// gradient along tangent directions (step 1e-7 * (1 + ||U||_F)).
// Instances hold private state; run one solve per instance at a time.
class TrustRegionSolver {
 public:
  explicit TrustRegionSolver(TrustRegionOptions opts = {}) : opts_(opts) {}

  SolveReport minimize(const ObjectiveFn& f, const GradientFn& egrad,
                       const StiefelPoint& U_init) const;

 private:
  TrustRegionOptions opts_;
};

struct ProcrustesResult {
  StiefelPoint point;
  bool unique = true;  // false when G is rank deficient
};

// Closed-form maximiser of Tr(G^T U) over the Stiefel manifold: U = P Q^T
// from the thin SVD G = P S Q^T.
ProcrustesResult procrustes_oracle(const Matrix& G);

}  // namespace netf
