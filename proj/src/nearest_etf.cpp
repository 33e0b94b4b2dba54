#include "netf/nearest_etf.hpp"

#include <stdexcept>

namespace netf {

NearestEtfProblem NearestEtfProblem::make(Matrix H_tilde, Eigen::Index C, double delta,
                                          const StiefelPoint& U_prox) {
  if (delta < 0.0) throw std::invalid_argument("NearestEtfProblem: delta must be >= 0");
  if (H_tilde.cols() != C || U_prox.C() != C || U_prox.d() != H_tilde.rows())
    throw std::invalid_argument("NearestEtfProblem: shape mismatch");
  NearestEtfProblem p;
  p.H_tilde = std::move(H_tilde);
  p.M_tilde = StandardEtf::make(C);
  p.delta = delta;
  p.U_prox = U_prox.matrix();
  return p;
}

double objective(const NearestEtfProblem& p, const Matrix& U) {
  double val = (p.H_tilde - U * p.M_tilde.matrix).squaredNorm();
  if (p.delta > 0.0) val += 0.5 * p.delta * (U - p.U_prox).squaredNorm();
  return val;
}

Matrix euclidean_gradient(const NearestEtfProblem& p, const Matrix& U) {
  Matrix g = 2.0 * (U * p.M_tilde.matrix - p.H_tilde) * p.M_tilde.matrix;
  if (p.delta > 0.0) g += p.delta * (U - p.U_prox);
  return g;
}

StiefelPoint haar_orthonormal(Eigen::Index d, Eigen::Index C, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix X(d, C);
  for (Eigen::Index j = 0; j < C; ++j)
    for (Eigen::Index i = 0; i < d; ++i) X(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(X);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, C);
  Matrix R = qr.matrixQR().topRows(C).triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < C; ++k)
    if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
  return StiefelPoint::from(std::move(Q));
}

StiefelPoint initialize_directions(const Matrix& H_tilde, Eigen::Index C, InitScheme scheme,
                                   std::mt19937_64& rng, const TrustRegionOptions& opts) {
  const Eigen::Index d = H_tilde.rows();
  StiefelPoint seed = scheme == InitScheme::canonical ? StiefelPoint::canonical(d, C)
                                                      : haar_orthonormal(d, C, rng);
  NearestEtfProblem p = NearestEtfProblem::make(H_tilde, C, 0.0, seed);
  EtfSolution sol = solve_nearest_etf(p, seed, opts);
  return sol.U_star;
}

EtfSolution solve_nearest_etf(const NearestEtfProblem& p, const StiefelPoint& U_init,
                              const TrustRegionOptions& opts) {
  auto f = [&p](const Matrix& U) { return objective(p, U); };
  auto g = [&p](const Matrix& U) { return euclidean_gradient(p, U); };
  TrustRegionSolver solver(opts);
  SolveReport report = solver.minimize(f, g, U_init);

  Matrix combined = p.H_tilde * p.M_tilde.matrix + 0.5 * p.delta * p.U_prox;
  Eigen::JacobiSVD<Matrix> svd(combined);
  const auto& sv = svd.singularValues();
  bool unique = sv(sv.size() - 1) > 1e-10 * sv(0);

  return {StiefelPoint::from(report.solution), report, unique};
}

ProcrustesResult nearest_etf_oracle(const NearestEtfProblem& p) {
  return procrustes_oracle(2.0 * p.H_tilde * p.M_tilde.matrix + p.delta * p.U_prox);
}

}  // namespace netf
