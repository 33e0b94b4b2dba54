#include "netf/etf.hpp"

#include <cmath>
#include <stdexcept>

namespace netf {

namespace {

Matrix centring_projector(Eigen::Index C) {
  return Matrix::Identity(C, C) - Matrix::Constant(C, C, 1.0 / static_cast<double>(C));
}

}  // namespace

StandardEtf StandardEtf::make(Eigen::Index C) {
  if (C < 2) throw std::domain_error("StandardEtf: C must be >= 2");
  StandardEtf etf;
  etf.C = C;
  etf.matrix = centring_projector(C) / std::sqrt(static_cast<double>(C - 1));
  return etf;
}

SimplexEtf build_simplex_etf(Eigen::Index C, Eigen::Index d, double alpha,
                             const Matrix& rotation) {
  if (d < C) throw std::invalid_argument("build_simplex_etf: requires d >= C");
  if (alpha <= 0.0) throw std::invalid_argument("build_simplex_etf: alpha must be positive");
  if (rotation.rows() != d || rotation.cols() != C)
    throw std::invalid_argument("build_simplex_etf: rotation must be d x C");
  if ((rotation.transpose() * rotation - Matrix::Identity(C, C)).norm() > 1e-8)
    throw std::invalid_argument("build_simplex_etf: rotation is not orthonormal");
  SimplexEtf etf;
  etf.C = C;
  etf.d = d;
  etf.alpha = alpha;
  etf.rotation = rotation;
  etf.matrix = alpha * std::sqrt(static_cast<double>(C) / static_cast<double>(C - 1)) *
               rotation * centring_projector(C);
  return etf;
}

Matrix unit_column_etf(Eigen::Index C) {
  return std::sqrt(static_cast<double>(C) / static_cast<double>(C - 1)) * centring_projector(C);
}

FeatureStatistics compute_feature_statistics(const Matrix& H, const std::vector<int>& labels,
                                             Eigen::Index C) {
  const Eigen::Index N = H.cols();
  if (N < 1 || static_cast<Eigen::Index>(labels.size()) != N)
    throw std::invalid_argument("compute_feature_statistics: bad inputs");
  FeatureStatistics st;
  st.counts.assign(static_cast<std::size_t>(C), 0);
  st.class_means = Matrix::Zero(H.rows(), C);
  for (Eigen::Index i = 0; i < N; ++i) {
    int c = labels[static_cast<std::size_t>(i)];
    if (c < 0 || c >= C) throw std::invalid_argument("compute_feature_statistics: bad label");
    st.class_means.col(c) += H.col(i);
    ++st.counts[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < C; ++c) {
    if (st.counts[static_cast<std::size_t>(c)] == 0)
      throw MissingClassError("class " + std::to_string(c) + " has no samples");
    st.class_means.col(c) /= static_cast<double>(st.counts[static_cast<std::size_t>(c)]);
  }
  st.global_mean = H.rowwise().mean();
  st.centred = st.class_means.colwise() - st.global_mean;
  st.centred_norm = st.centred.norm();
  if (st.centred_norm == 0.0)
    throw DegenerateFeaturesError("centred class means are identically zero");
  st.normalised = st.centred / st.centred_norm;
  return st;
}

Matrix sigma_within(const Matrix& H, const std::vector<int>& labels,
                    const FeatureStatistics& st) {
  Matrix S = Matrix::Zero(H.rows(), H.rows());
  for (Eigen::Index i = 0; i < H.cols(); ++i) {
    Vector r = H.col(i) - st.class_means.col(labels[static_cast<std::size_t>(i)]);
    S.noalias() += r * r.transpose();
  }
  return S / static_cast<double>(H.cols());
}

Matrix sigma_between(const FeatureStatistics& st) {
  const Eigen::Index C = st.class_means.cols();
  Matrix S = Matrix::Zero(st.class_means.rows(), st.class_means.rows());
  for (Eigen::Index c = 0; c < C; ++c)
    S.noalias() += st.centred.col(c) * st.centred.col(c).transpose();
  return S / static_cast<double>(C);
}

double nc1(const Matrix& H, const std::vector<int>& labels, Eigen::Index C) {
  if (C < 2) throw std::domain_error("nc1: need at least 2 classes");
  FeatureStatistics st = compute_feature_statistics(H, labels, C);
  Matrix SW = sigma_within(H, labels, st);
  Matrix SB = sigma_between(st);
  Eigen::JacobiSVD<Matrix> svd(SB, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = 1e-10 * sv(0);
  Matrix pinv = Matrix::Zero(SB.cols(), SB.rows());
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff)
      pinv.noalias() += (1.0 / sv(k)) * svd.matrixV().col(k) * svd.matrixU().col(k).transpose();
  }
  return (SW * pinv).trace() / static_cast<double>(C);
}

double nc2(const Matrix& W) {
  if (W.norm() == 0.0) throw std::domain_error("nc2: zero classifier");
  const Eigen::Index C = W.rows();
  Matrix G = W * W.transpose();
  return (G / G.norm() - StandardEtf::make(C).matrix).norm();
}

double nc3(const Matrix& W, const Matrix& H_bar) {
  Matrix P = W * H_bar;
  if (P.norm() == 0.0) throw std::domain_error("nc3: zero W*H_bar product");
  return (P / P.norm() - StandardEtf::make(W.rows()).matrix).norm();
}

double nc4_agreement(const Matrix& W, const Vector& b, const Matrix& H,
                     const std::vector<int>& labels, const Matrix& class_means) {
  (void)labels;
  const Eigen::Index N = H.cols();
  const Eigen::Index C = W.rows();
  Eigen::Index agree = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    Vector scores = W * H.col(i) + b;
    Eigen::Index best_cls = 0;
    for (Eigen::Index c = 1; c < C; ++c)
      if (scores(c) > scores(best_cls)) best_cls = c;
    Eigen::Index best_ctr = 0;
    double best_dist = (H.col(i) - class_means.col(0)).squaredNorm();
    for (Eigen::Index c = 1; c < C; ++c) {
      double dist = (H.col(i) - class_means.col(c)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best_ctr = c;
      }
    }
    if (best_cls == best_ctr) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(N);
}

double equinorm_gap(const Matrix& W, const Matrix& H_bar) {
  auto coeff_var = [](const Vector& norms) {
    double avg = norms.mean();
    if (avg == 0.0) throw std::domain_error("equinorm_gap: zero average norm");
    double var = (norms.array() - avg).square().mean();
    return std::sqrt(var) / avg;
  };
  Vector wn = W.rowwise().norm();
  Vector hn = H_bar.colwise().norm();
  return std::abs(coeff_var(wn) - coeff_var(hn));
}

CosineMargins cosine_margins(const Matrix& W, const Matrix& H, const std::vector<int>& labels) {
  const Eigen::Index N = H.cols();
  const Eigen::Index C = W.rows();
  Vector w_G = W.colwise().mean();
  Matrix Wc = W.rowwise() - w_G.transpose();
  Vector h_G = H.rowwise().mean();
  Vector wc_norms = Wc.rowwise().norm();

  CosineMargins out;
  out.values.reserve(static_cast<std::size_t>(N));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    Vector hc = H.col(i) - h_G;
    double hn = hc.norm();
    int c = labels[static_cast<std::size_t>(i)];
    if (hn == 0.0 || wc_norms(c) == 0.0) {
      out.excluded.push_back(i);
      continue;
    }
    double own = Wc.row(c).dot(hc) / (wc_norms(c) * hn);
    double rival = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < C; ++j) {
      if (j == c || wc_norms(j) == 0.0) continue;
      rival = std::max(rival, Wc.row(j).dot(hc) / (wc_norms(j) * hn));
    }
    double m = own - rival;
    out.values.push_back(m);
    sum += m;
  }
  if (!out.values.empty()) out.mean = sum / static_cast<double>(out.values.size());
  return out;
}

}  // namespace netf
