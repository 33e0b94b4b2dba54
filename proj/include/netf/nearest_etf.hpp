#pragma once

#include <random>

#include "netf/etf.hpp"
#include "netf/stiefel.hpp"

namespace netf {

// The proximal nearest-simplex-ETF problem:
//   minimise ||H~ - U M~||_F^2 + (delta/2) ||U - U_prox||_F^2  over U in St(d, C).
struct NearestEtfProblem {
  Matrix H_tilde;      // d x C, unit Frobenius norm
  StandardEtf M_tilde;
  double delta = 1e-3;
  Matrix U_prox;       // d x C on the manifold

  static NearestEtfProblem make(Matrix H_tilde, Eigen::Index C, double delta,
                                const StiefelPoint& U_prox);
};

double objective(const NearestEtfProblem& p, const Matrix& U);

// 2 (U M~ - H~) M~ + delta (U - U_prox); matches central finite differences
// of the objective.
Matrix euclidean_gradient(const NearestEtfProblem& p, const Matrix& U);

struct EtfSolution {
  StiefelPoint U_star;
  SolveReport report;
  bool unique = true;  // full column rank of H~ M~ + (delta/2) U_prox
};

enum class InitScheme { canonical, haar_random };

// Builds the scheme's seed point and solves the delta = 0 problem from it.
// The returned point serves as both U_init and U_prox for the proximal runs.
StiefelPoint initialize_directions(const Matrix& H_tilde, Eigen::Index C, InitScheme scheme,
                                   std::mt19937_64& rng,
                                   const TrustRegionOptions& opts = {});

// Haar-distributed orthonormal d x C matrix (QR of a Gaussian with the sign
// of diag(R) fixed).
StiefelPoint haar_orthonormal(Eigen::Index d, Eigen::Index C, std::mt19937_64& rng);

EtfSolution solve_nearest_etf(const NearestEtfProblem& p, const StiefelPoint& U_init,
                              const TrustRegionOptions& opts = {});

// Closed-form global solution: the polar factor of 2 H~ M~ + delta U_prox.
// Both Frobenius terms of the objective are constant on the manifold, so the
// problem reduces to a linear objective over St(d, C).
ProcrustesResult nearest_etf_oracle(const NearestEtfProblem& p);

}  // namespace netf
