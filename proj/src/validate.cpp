#include "netf/validate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "netf/ddn.hpp"
#include "netf/trainer.hpp"

namespace netf {

namespace {

using Clock = std::chrono::steady_clock;

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) A(i, j) = g(rng);
  return A;
}

Matrix random_unit_h(Eigen::Index d, Eigen::Index C, std::mt19937_64& rng) {
  Matrix H = random_matrix(d, C, rng);
  return H / H.norm();
}

double check_vectorisation(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    Matrix A = random_matrix(3, 4, rng), B = random_matrix(4, 5, rng),
           Cm = random_matrix(5, 2, rng);
    worst = std::max(worst, (rvec_inv(rvec(A), 3, 4) - A).norm());
    worst = std::max(worst, (kron(A, Cm.transpose()) * rvec(B) - rvec(A * B * Cm)).norm());
    CommutationMatrix K(3, 4);
    worst = std::max(worst, (K.apply(rvec(A)) - rvec(Matrix(A.transpose()))).norm());
    // K(m,r) (A (x) B) K(q,n) = B (x) A for A m x n, B r x q
    Matrix Bq = random_matrix(5, 2, rng);
    CommutationMatrix Krm(3, 5), Knq(2, 4);
    worst = std::max(worst,
                     (Krm.applyLeft(Knq.applyRight(kron(A, Bq)).eval()) - kron(Bq, A)).norm());
    Matrix S = random_matrix(4, 4, rng);
    S = 0.5 * (S + S.transpose()).eval();
    EliminationMatrix L(4);
    Vector low = L.applyRvec(rvec(S));
    double err = 0.0;
    for (Eigen::Index r = 0; r < L.rows(); ++r) {
      auto [i, j] = L.entryForRow(r);
      err = std::max(err, std::abs(low[r] - S(i, j)));
    }
    worst = std::max(worst, err);
  }
  return worst;
}

double check_procrustes(std::mt19937_64& rng) {
  double worst = 0.0;
  for (Eigen::Index d : {4, 8}) {
    for (Eigen::Index C : {Eigen::Index(2), Eigen::Index(3)}) {
      if (C > d) continue;
      for (int t = 0; t < 8; ++t) {
        StiefelPoint prox = haar_orthonormal(d, C, rng);
        auto p = NearestEtfProblem::make(random_unit_h(d, C, rng), C, 1e-3, prox);
        EtfSolution sol = solve_nearest_etf(p, prox);
        double f_solver = objective(p, sol.U_star.matrix());
        double f_oracle = objective(p, nearest_etf_oracle(p).point.matrix());
        worst = std::max(worst, std::abs(f_solver - f_oracle));
        worst = std::max(worst, sol.U_star.feasibility());
      }
    }
  }
  return worst;
}

double check_implicit_gradient(std::mt19937_64& rng) {
  const Eigen::Index d = 6, C = 3;
  const double delta = 1e-3, eps = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    StiefelPoint prox = haar_orthonormal(d, C, rng);
    Matrix H = random_unit_h(d, C, rng);
    auto p = NearestEtfProblem::make(H, C, delta, prox);
    EtfSolution sol = solve_nearest_etf(p, nearest_etf_oracle(p).point,
                                        TrustRegionOptions{.tol = 1e-12});
    Matrix Dy = ImplicitJacobian::build(p, sol).dense();
    Matrix Dy_fd(d * C, d * C);
    for (Eigen::Index k = 0; k < d * C; ++k) {
      Matrix E = Matrix::Zero(d, C);
      E(k / C, k % C) = 1.0;
      auto pp = NearestEtfProblem::make(H + eps * E, C, delta, prox);
      auto pm = NearestEtfProblem::make(H - eps * E, C, delta, prox);
      Dy_fd.col(k) = rvec(nearest_etf_oracle(pp).point.matrix() -
                          nearest_etf_oracle(pm).point.matrix()) /
                     (2.0 * eps);
    }
    worst = std::max(worst, (Dy - Dy_fd).norm() / Dy_fd.norm());
  }
  return worst;
}

double check_gram_determinant(std::mt19937_64& rng) {
  double worst = 0.0;
  for (Eigen::Index C = 2; C <= 4; ++C) {
    StiefelPoint U = haar_orthonormal(C + 3, C, rng);
    double expected = std::pow(2.0, static_cast<double>(C * (C - 1) / 2));
    double det = constraint_gram(U).determinant();
    worst = std::max(worst, std::abs(det - expected) / expected);
  }
  return worst;
}

double check_collapse_fixed_point(std::mt19937_64& rng) {
  const Eigen::Index d = 12, C = 5;
  StiefelPoint U = haar_orthonormal(d, C, rng);
  Matrix H = U.matrix() * StandardEtf::make(C).matrix;  // unit Frobenius norm
  auto p = NearestEtfProblem::make(H, C, 1e-3, U);
  double worst = (nearest_etf_oracle(p).point.matrix() - U.matrix()).norm();

  // CE of the collapsed configuration equals the analytic collapse target.
  const double tau = 5.0;
  Matrix M_bar = unit_column_etf(C);
  std::vector<int> labels(static_cast<std::size_t>(C));
  for (Eigen::Index c = 0; c < C; ++c) labels[static_cast<std::size_t>(c)] = static_cast<int>(c);
  Matrix feats = U.matrix() * M_bar;
  Matrix logits = implicit_logits(feats, U, Vector::Zero(d), tau);
  worst = std::max(worst, std::abs(cross_entropy(logits, labels) - collapse_lower_bound(C, tau)));
  return worst;
}

}  // namespace

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

ValidationReport validate_suite(std::ostream& out) {
  std::mt19937_64 rng(0xE7F5EEDULL);
  struct Entry {
    const char* name;
    double tol;
    double (*fn)(std::mt19937_64&);
  };
  const Entry entries[] = {
      {"vectorisation identities", 1e-12, check_vectorisation},
      {"closed-form solver agreement", 1e-8, check_procrustes},
      {"implicit gradient vs finite differences", 1e-4, check_implicit_gradient},
      {"constraint Gram determinant", 1e-8, check_gram_determinant},
      {"collapse fixed point", 1e-6, check_collapse_fixed_point},
  };

  ValidationReport report;
  for (const auto& e : entries) {
    auto t0 = Clock::now();
    ValidationCheck c;
    c.name = e.name;
    c.tolerance = e.tol;
    c.measured = e.fn(rng);
    c.passed = std::isfinite(c.measured) && c.measured <= c.tolerance;
    c.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %-42s err=%.3e tol=%.0e (%.3fs)\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.tolerance,
                  c.seconds);
    out << line;
    report.checks.push_back(std::move(c));
  }
  return report;
}

}  // namespace netf
