#include "doctest.h"
#include "netf/linalg.hpp"

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

TEST_CASE("rvec is row-major and round-trips") {
  Matrix A(2, 3);
  A << 1, 2, 3, 4, 5, 6;
  Vector v = rvec(A);
  CHECK(v(0) == 1);
  CHECK(v(1) == 2);
  CHECK(v(2) == 3);
  CHECK(v(3) == 4);
  CHECK(v(5) == 6);
  CHECK((rvec_inv(v, 2, 3) - A).norm() == 0.0);

  std::mt19937_64 rng(1);
  for (auto [r, c] : {std::pair<int, int>{1, 1}, {5, 2}, {3, 7}}) {
    Matrix B = randm(r, c, rng);
    CHECK((rvec_inv(rvec(B), r, c) - B).norm() == 0.0);
  }
  CHECK_THROWS_AS(rvec_inv(v, 3, 3), std::invalid_argument);
}

TEST_CASE("kron identities") {
  Matrix one(1, 1);
  one << 5;
  Matrix D = kron(Matrix::Identity(2, 2), one);
  CHECK(D(0, 0) == 5);
  CHECK(D(1, 1) == 5);
  CHECK(D(0, 1) == 0);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    Matrix A = randm(2, 2, rng), B = randm(2, 2, rng), C = randm(2, 2, rng), E = randm(2, 2, rng);
    CHECK((kron(A, C.transpose()) * rvec(B) - rvec(A * B * C)).norm() < 1e-13);
    CHECK((kron(A, B) * kron(C, E) - kron(A * C, B * E)).norm() < 1e-13);
  }
}

TEST_CASE("commutation matrix transposes rvec and is a permutation") {
  std::mt19937_64 rng(3);
  for (auto [m, n] : {std::pair<int, int>{2, 3}, {4, 4}, {1, 5}}) {
    CommutationMatrix K(m, n);
    Matrix A = randm(m, n, rng);
    CHECK((K.apply(rvec(A)) - rvec(Matrix(A.transpose()))).norm() == 0.0);

    Matrix D = K.dense();
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
      CHECK(D.row(i).sum() == 1.0);
      CHECK(D.col(i).sum() == 1.0);
      CHECK(D.row(i).maxCoeff() == 1.0);
    }
  }
}

TEST_CASE("commutation sandwich swaps kronecker factors") {
  // K(m,r) (A (x) B) K(q,n) = B (x) A for A m x n, B r x q.
  std::mt19937_64 rng(4);
  const int m = 3, n = 4, r = 5, q = 2;
  Matrix A = randm(m, n, rng), B = randm(r, q, rng);
  CommutationMatrix KL(m, r), KR(q, n);
  CHECK((KL.applyLeft(KR.applyRight(kron(A, B))) - kron(B, A)).norm() < 1e-14);
  CHECK((KL.dense() * kron(A, B) * KR.dense() - kron(B, A)).norm() < 1e-14);
}

TEST_CASE("elimination matrix selects each independent entry exactly once") {
  std::mt19937_64 rng(5);
  for (int n = 2; n <= 6; ++n) {
    EliminationMatrix L(n);
    CHECK(L.rows() == n * (n + 1) / 2);
    CHECK(L.cols() == n * n);

    Matrix S = randm(n, n, rng);
    S = (0.5 * (S + S.transpose())).eval();
    Vector low = L.applyRvec(rvec(S));
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(n),
                                        std::vector<bool>(static_cast<std::size_t>(n), false));
    for (Eigen::Index rr = 0; rr < L.rows(); ++rr) {
      auto [i, j] = L.entryForRow(rr);
      CHECK(i >= j);
      CHECK(!seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
      CHECK(low[rr] == S(i, j));
    }
    Matrix D = L.dense();
    for (Eigen::Index rr = 0; rr < D.rows(); ++rr) CHECK(D.row(rr).sum() == 1.0);
  }
}
