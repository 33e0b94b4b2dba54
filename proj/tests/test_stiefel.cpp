#include "doctest.h"
#include "netf/nearest_etf.hpp"

#include <cmath>
#include <random>

using namespace netf;

namespace {

Matrix randm(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix A(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) A(i, j) = g(rng);
  return A;
}

}  // namespace

TEST_CASE("point construction and feasibility") {
  StiefelPoint I = StiefelPoint::canonical(5, 3);
  CHECK(I.feasibility() < 1e-15);
  CHECK(I.matrix()(0, 0) == 1.0);
  CHECK(I.matrix()(4, 2) == 0.0);
  CHECK_THROWS_AS(StiefelPoint::from(Matrix::Ones(3, 2)), std::invalid_argument);

  std::mt19937_64 rng(21);
  StiefelPoint P = StiefelPoint::project(randm(6, 3, rng));
  CHECK(P.feasibility() < 1e-12);
}

TEST_CASE("tangent projection and riemannian gradient") {
  std::mt19937_64 rng(22);
  StiefelPoint U = haar_orthonormal(7, 3, rng);
  Matrix Z = randm(7, 3, rng);
  Matrix T = project_to_tangent(U, Z).matrix;
  Matrix S = U.matrix().transpose() * T + T.transpose() * U.matrix();
  CHECK(S.norm() < 1e-13);
  // idempotent
  CHECK((project_to_tangent(U, T).matrix - T).norm() < 1e-13);

  Matrix g = randm(7, 3, rng);
  Matrix rg = riemannian_gradient(U, g).matrix;
  Matrix S2 = U.matrix().transpose() * rg + rg.transpose() * U.matrix();
  CHECK(S2.norm() < 1e-13);
}

TEST_CASE("QR retraction: feasibility, identity at zero, first-order agreement") {
  std::mt19937_64 rng(23);
  StiefelPoint U = haar_orthonormal(6, 4, rng);
  CHECK((retract(U, Matrix::Zero(6, 4)).matrix() - U.matrix()).norm() < 1e-13);

  Matrix Z = project_to_tangent(U, randm(6, 4, rng)).matrix;
  double prev_defect = 1e300;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    StiefelPoint R = retract(U, t * Z);
    CHECK(R.feasibility() < 1e-12);
    double defect = (R.matrix() - (U.matrix() + t * Z)).norm();
    // quadratic defect: shrinking t by 10 shrinks the defect by ~100
    CHECK(defect < 0.05 * prev_defect);
    prev_defect = defect;
  }
}

TEST_CASE("procrustes oracle against O(2) angle grid") {
  std::mt19937_64 rng(24);
  Matrix G = randm(2, 2, rng);
  ProcrustesResult res = procrustes_oracle(G);
  double best = -1e300;
  Matrix best_U;
  // exhaustive rotations and reflections
  for (int refl = 0; refl < 2; ++refl) {
    for (double th = 0.0; th < 2 * M_PI; th += 1e-4) {
      Matrix U(2, 2);
      U << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      if (refl) U.col(1) = -U.col(1);
      double val = (G.array() * U.array()).sum();
      if (val > best) {
        best = val;
        best_U = U;
      }
    }
  }
  CHECK(std::abs((G.array() * res.point.matrix().array()).sum() - best) < 1e-6);
  CHECK((res.point.matrix() - best_U).norm() < 1e-3);
  CHECK_THROWS(procrustes_oracle(Matrix::Zero(2, 2)));
}

TEST_CASE("trust region reaches the closed-form optimum") {
  std::mt19937_64 rng(25);
  for (int t = 0; t < 5; ++t) {
    const Eigen::Index d = 8, C = 3;
    StiefelPoint prox = haar_orthonormal(d, C, rng);
    Matrix H = randm(d, C, rng);
    H /= H.norm();
    auto p = NearestEtfProblem::make(H, C, 1e-3, prox);
    EtfSolution sol = solve_nearest_etf(p, haar_orthonormal(d, C, rng));
    CHECK(sol.report.converged);
    CHECK(sol.U_star.feasibility() < 1e-10);
    double f_oracle = objective(p, nearest_etf_oracle(p).point.matrix());
    CHECK(objective(p, sol.U_star.matrix()) - f_oracle < 1e-8);
  }
}
