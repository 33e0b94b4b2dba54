#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "netf/linalg.hpp"

namespace netf {

// C x C centring-based simplex ETF with unit Frobenius norm:
// M~ = (1/sqrt(C-1)) (I - 11^T/C). Symmetric, M~ 1 = 0, ||M~||_F = 1.
struct StandardEtf {
  Eigen::Index C;
  Matrix matrix;

  static StandardEtf make(Eigen::Index C);
};

// General simplex ETF: M = alpha sqrt(C/(C-1)) U (I - 11^T/C) with U an
// orthonormal d x C rotation. At alpha = 1 every column has unit norm.
struct SimplexEtf {
  Eigen::Index C;
  Eigen::Index d;
  double alpha;
  Matrix rotation;  // d x C, orthonormal columns
  Matrix matrix;    // d x C
};

SimplexEtf build_simplex_etf(Eigen::Index C, Eigen::Index d, double alpha,
                             const Matrix& rotation);

// The C x C unit-column simplex ETF (alpha = 1, U = I): columns are the
// class directions used by the classifier map W = M U*^T.
Matrix unit_column_etf(Eigen::Index C);

struct FeatureStatistics {
  Vector global_mean;          // h_G
  Matrix class_means;          // d x C
  Matrix centred;              // H_bar, column c = mean_c - h_G
  Matrix normalised;           // H~ = H_bar / ||H_bar||_F
  double centred_norm = 0.0;   // ||H_bar||_F
  std::vector<Eigen::Index> counts;
};

// Per-class means over columns of H (d x N). Throws
// MissingClassError when some class in 0..C-1 has no sample and
// DegenerateFeaturesError when all class means coincide.
FeatureStatistics compute_feature_statistics(const Matrix& H,
                                             const std::vector<int>& labels,
                                             Eigen::Index C);

struct MissingClassError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateFeaturesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Within/between-class covariances.
Matrix sigma_within(const Matrix& H, const std::vector<int>& labels, const FeatureStatistics& st);
Matrix sigma_between(const FeatureStatistics& st);

// NC1 = (1/C) Tr(Sigma_W pinv(Sigma_B)); pseudo-inverse via SVD with
// relative cutoff 1e-10 (Sigma_B has rank <= C-1 by construction).
double nc1(const Matrix& H, const std::vector<int>& labels, Eigen::Index C);

// NC2 = || WW^T/||WW^T||_F - M~ ||_F
double nc2(const Matrix& W);

// NC3 = || W H_bar/||W H_bar||_F - M~ ||_F
double nc3(const Matrix& W, const Matrix& H_bar);

// Fraction of samples where argmax_c <w_c, h> + b_c picks the same class as
// the nearest class centre. Ties break to the lowest class index.
double nc4_agreement(const Matrix& W, const Vector& b, const Matrix& H,
                     const std::vector<int>& labels, const Matrix& class_means);

// | std/avg of classifier row norms  -  std/avg of centred mean norms |
double equinorm_gap(const Matrix& W, const Matrix& H_bar);

struct CosineMargins {
  std::vector<double> values;          // one per usable sample
  std::vector<Eigen::Index> excluded;  // samples with zero-norm centred vectors
  double mean = 0.0;
};

// CM_{c,i} = cos(w_c - w_G, h - h_G) - max_{j != c} cos(w_j - w_G, h - h_G).
// w_G is the mean of classifier rows.
CosineMargins cosine_margins(const Matrix& W, const Matrix& H, const std::vector<int>& labels);

struct NcMetricsRecord {
  double nc1 = 0.0;
  double nc2 = 0.0;
  double nc3 = 0.0;
  double nc4_agreement = 0.0;
  double equinorm_gap = 0.0;
  double mean_cosine_margin = 0.0;
};

}  // namespace netf
