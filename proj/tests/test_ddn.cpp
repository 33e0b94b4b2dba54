#include "doctest.h"
#include "netf/ddn.hpp"

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

Matrix unit_h(Eigen::Index d, Eigen::Index C, std::mt19937_64& rng) {
  Matrix H = randm(d, C, rng);
  return H / H.norm();
}

EtfSolution solved(const NearestEtfProblem& p) {
  ProcrustesResult oracle = nearest_etf_oracle(p);
  TrustRegionOptions opts;
  opts.tol = 1e-12;
  return solve_nearest_etf(p, oracle.point, opts);
}

}  // namespace

TEST_CASE("constraint jacobian structure") {
  // scalar case d = C = 1: derivative of u^2 - 1 is 2u
  Matrix one(1, 1);
  one << -1.0;
  Matrix A1 = constraint_jacobian(StiefelPoint::from(one));
  CHECK(A1.rows() == 1);
  CHECK(A1(0, 0) == -2.0);

  std::mt19937_64 rng(41);
  StiefelPoint U = haar_orthonormal(4, 2, rng);
  Matrix A = constraint_jacobian(U);
  CHECK(A.rows() == 3);
  CHECK(A.cols() == 8);

  // tangent directions are annihilated
  Matrix Z = project_to_tangent(U, randm(4, 2, rng)).matrix;
  CHECK((A * rvec(Z)).norm() < 1e-10);

  // normal directions U*S are detected
  Matrix S = randm(2, 2, rng);
  S = (0.5 * (S + S.transpose())).eval();
  CHECK((A * rvec(Matrix(U.matrix() * S))).norm() > 1e-3);

  // matches the elimination/commutation composition
  const Eigen::Index C = 2;
  Matrix comp = EliminationMatrix(C).dense() *
                (CommutationMatrix(C, C).dense() + Matrix::Identity(C * C, C * C)) *
                kron(U.matrix(), Matrix::Identity(C, C)).transpose();
  CHECK((comp - A).norm() < 1e-13);

  // full row rank
  Eigen::JacobiSVD<Matrix> svd(A);
  CHECK(svd.singularValues().minCoeff() > 1e-6);
}

TEST_CASE("mixed hessian block structure and finite differences") {
  std::mt19937_64 rng(42);
  const Eigen::Index d = 4, C = 3;
  StandardEtf Mt = StandardEtf::make(C);
  Matrix B = mixed_hessian_dense(d, Mt);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      Matrix blk = B.block(i * C, j * C, C, C);
      if (i == j)
        CHECK((blk + 2.0 * Mt.matrix).norm() < 1e-14);
      else
        CHECK(blk.norm() == 0.0);
    }

  // column (k,l) of B is the change of the gradient under a perturbation of H~[k,l]
  StiefelPoint prox = haar_orthonormal(d, C, rng);
  Matrix H = unit_h(d, C, rng);
  Matrix U = haar_orthonormal(d, C, rng).matrix();
  const double eps = 1e-6;
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < C; ++l) {
      Matrix Hp = H, Hm = H;
      Hp(k, l) += eps;
      Hm(k, l) -= eps;
      auto pp = NearestEtfProblem::make(Hp, C, 1e-3, prox);
      auto pm = NearestEtfProblem::make(Hm, C, 1e-3, prox);
      Vector fd = rvec(Matrix((euclidean_gradient(pp, U) - euclidean_gradient(pm, U)) / (2 * eps)));
      CHECK((fd - B.col(k * C + l)).norm() < 1e-5);
    }
}

TEST_CASE("sigma matrix holds the multiplier functions") {
  std::mt19937_64 rng(43);
  const Eigen::Index d = 5, C = 3;
  StiefelPoint U = haar_orthonormal(d, C, rng);
  Matrix g = randm(d, C, rng);
  Matrix Sig = sigma_matrix(U, g);
  CHECK((Sig - Sig.transpose()).norm() < 1e-14);
  for (Eigen::Index s = 0; s < C; ++s)
    CHECK(std::abs(Sig(s, s) - g.col(s).dot(U.matrix().col(s))) < 1e-13);
  for (Eigen::Index q = 0; q < C; ++q)
    for (Eigen::Index p = 0; p < q; ++p) {
      double expect =
          0.5 * (g.col(q).dot(U.matrix().col(p)) + g.col(p).dot(U.matrix().col(q)));
      CHECK(std::abs(Sig(p, q) - expect) < 1e-13);
    }
}

TEST_CASE("curvature term: two assembly routes coincide") {
  std::mt19937_64 rng(44);
  for (auto [d, C] : {std::pair<Eigen::Index, Eigen::Index>{4, 2}, {6, 3}}) {
    StiefelPoint prox = haar_orthonormal(d, C, rng);
    auto p = NearestEtfProblem::make(unit_h(d, C, rng), C, 1e-3, prox);
    EtfSolution sol = solved(p);
    Matrix egrad = euclidean_gradient(p, sol.U_star.matrix());
    Matrix G1 = curvature_G(p, sol.U_star, egrad);
    Matrix G2 = curvature_G_lagrange(p, sol.U_star, egrad);
    CHECK((G1 - G1.transpose()).norm() < 1e-10);
    CHECK((G1 - G2).norm() < 1e-8);
  }
}

TEST_CASE("large-delta curvature asymptotics") {
  std::mt19937_64 rng(45);
  const Eigen::Index d = 5, C = 3;
  StiefelPoint prox = haar_orthonormal(d, C, rng);
  Matrix H = 1e-6 * unit_h(d, C, rng);
  const double delta = 1e3;
  auto p = NearestEtfProblem::make(H, C, delta, prox);
  EtfSolution sol = solved(p);
  Matrix egrad = euclidean_gradient(p, sol.U_star.matrix());
  Matrix G = curvature_G(p, sol.U_star, egrad);
  Matrix Sig = 0.5 * delta *
               (prox.matrix().transpose() * sol.U_star.matrix() +
                sol.U_star.matrix().transpose() * prox.matrix());
  Matrix approx = delta * Matrix::Identity(d * C, d * C) -
                  kron(Matrix::Identity(d, d), Matrix(Sig - delta * Matrix::Identity(C, C)));
  CHECK((G - approx).norm() / G.norm() < 1e-2);
}

TEST_CASE("constraint hessian blocks reproduce second differentials") {
  std::mt19937_64 rng(46);
  const Eigen::Index d = 4, C = 3;
  StiefelPoint U = haar_orthonormal(d, C, rng);
  Matrix Z = randm(d, C, rng);
  for (Eigen::Index q = 0; q < C; ++q)
    for (Eigen::Index p = 0; p <= q; ++p) {
      Matrix E = Matrix::Zero(C, C);
      E(p, q) += 1.0;
      E(q, p) += 1.0;
      double quad = rvec(Z).dot(kron(Matrix::Identity(d, d), E) * rvec(Z));
      // second differential of u_p^T u_q along Z is 2 z_p^T z_q
      CHECK(std::abs(quad - 2.0 * Z.col(p).dot(Z.col(q))) < 1e-10);
    }
}

TEST_CASE("constraint gram determinant invariant") {
  std::mt19937_64 rng(47);
  for (Eigen::Index C = 2; C <= 4; ++C) {
    StiefelPoint U = haar_orthonormal(C + 2, C, rng);
    double expected = std::pow(2.0, double(C * (C - 1) / 2));
    CHECK(std::abs(constraint_gram(U).determinant() - expected) / expected < 1e-8);
  }
}

TEST_CASE("implicit jacobian matches re-solve finite differences") {
  std::mt19937_64 rng(48);
  const Eigen::Index d = 8, C = 3;
  const double delta = 1e-3, eps = 1e-5;
  StiefelPoint prox = haar_orthonormal(d, C, rng);
  Matrix H = unit_h(d, C, rng);
  auto p = NearestEtfProblem::make(H, C, delta, prox);
  EtfSolution sol = solved(p);
  ImplicitJacobian jac = ImplicitJacobian::build(p, sol);
  CHECK(jac.stationary());

  Matrix Dy = jac.dense();
  Matrix Dy_fd(d * C, d * C);
  for (Eigen::Index k = 0; k < d * C; ++k) {
    Matrix E = Matrix::Zero(d, C);
    E(k / C, k % C) = 1.0;
    auto pp = NearestEtfProblem::make(H + eps * E, C, delta, prox);
    auto pm = NearestEtfProblem::make(H - eps * E, C, delta, prox);
    Dy_fd.col(k) =
        rvec(nearest_etf_oracle(pp).point.matrix() - nearest_etf_oracle(pm).point.matrix()) /
        (2 * eps);
  }
  CHECK((Dy - Dy_fd).norm() / Dy_fd.norm() < 1e-4);

  SUBCASE("vjp is the transpose action") {
    Matrix v = randm(d, C, rng);
    CHECK((rvec(jac.vjp(v)) - Dy.transpose() * rvec(v)).norm() < 1e-10);
    CHECK(jac.vjp(Matrix::Zero(d, C)).norm() == 0.0);
    Matrix w = randm(d, C, rng);
    Matrix lin = jac.vjp(Matrix(2.0 * v + 3.0 * w));
    CHECK((lin - 2.0 * jac.vjp(v) - 3.0 * jac.vjp(w)).norm() < 1e-10);
    CHECK_THROWS_AS(jac.vjp(Matrix::Zero(C, d)), std::invalid_argument);
  }

  SUBCASE("doubling delta damps the sensitivity") {
    auto p2 = NearestEtfProblem::make(H, C, 2 * delta, prox);
    EtfSolution sol2 = solved(p2);
    Matrix Dy2 = ImplicitJacobian::build(p2, sol2).dense();
    CHECK(Dy2.norm() < Dy.norm());
  }

  SUBCASE("corrupted mixed hessian is caught by the finite-difference check") {
    testing_hooks::flip_mixed_hessian_sign = true;
    Matrix Dy_bad = jac.dense();
    testing_hooks::flip_mixed_hessian_sign = false;
    CHECK((Dy_bad - Dy_fd).norm() / Dy_fd.norm() > 0.5);
  }
}

TEST_CASE("non-stationary solutions are flagged") {
  std::mt19937_64 rng(49);
  const Eigen::Index d = 6, C = 3;
  StiefelPoint prox = haar_orthonormal(d, C, rng);
  auto p = NearestEtfProblem::make(unit_h(d, C, rng), C, 1e-3, prox);
  // hand the jacobian a random feasible point instead of the optimum
  EtfSolution fake{haar_orthonormal(d, C, rng), SolveReport{}, true};
  ImplicitJacobian jac = ImplicitJacobian::build(p, fake);
  CHECK_FALSE(jac.stationary());
}
