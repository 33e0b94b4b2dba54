#include "netf/linalg.hpp"

#include <stdexcept>

namespace netf {

Vector rvec(const Matrix& A) {
  Vector v(A.size());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) v[i * A.cols() + j] = A(i, j);
  return v;
}

Matrix rvec_inv(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols)
    throw std::invalid_argument("rvec_inv: length " + std::to_string(v.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  Matrix A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) A(i, j) = v[i * cols + j];
  return A;
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

CommutationMatrix::CommutationMatrix(Eigen::Index m, Eigen::Index n) : m_(m), n_(n) {
  if (m < 1 || n < 1) throw std::invalid_argument("CommutationMatrix: dims must be >= 1");
  source_.resize(static_cast<std::size_t>(m * n));
  // rvec(A^T)[j*m + i] = A(i, j) = rvec(A)[i*n + j]
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) source_[static_cast<std::size_t>(j * m + i)] = i * n + j;
}

Vector CommutationMatrix::apply(const Vector& v) const {
  if (v.size() != size()) throw std::invalid_argument("CommutationMatrix: size mismatch");
  Vector out(v.size());
  for (Eigen::Index t = 0; t < v.size(); ++t) out[t] = v[source_[static_cast<std::size_t>(t)]];
  return out;
}

Matrix CommutationMatrix::applyLeft(const Matrix& A) const {
  if (A.rows() != size()) throw std::invalid_argument("CommutationMatrix: row mismatch");
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index t = 0; t < A.rows(); ++t)
    out.row(t) = A.row(source_[static_cast<std::size_t>(t)]);
  return out;
}

Matrix CommutationMatrix::applyRight(const Matrix& A) const {
  if (A.cols() != size()) throw std::invalid_argument("CommutationMatrix: col mismatch");
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index t = 0; t < A.cols(); ++t)
    out.col(source_[static_cast<std::size_t>(t)]) = A.col(t);
  return out;
}

Matrix CommutationMatrix::dense() const {
  Matrix K = Matrix::Zero(size(), size());
  for (Eigen::Index t = 0; t < size(); ++t) K(t, source_[static_cast<std::size_t>(t)]) = 1.0;
  return K;
}

EliminationMatrix::EliminationMatrix(Eigen::Index n) : n_(n) {
  if (n < 1) throw std::invalid_argument("EliminationMatrix: n must be >= 1");
  vec_source_.assign(static_cast<std::size_t>(rows()), -1);
  // u_ij places its 1 in position (j-1)n + i - j(j-1)/2 (1-based) and the
  // selected vec(E_ij) entry sits at column-major index (j-1)n + i.
  for (Eigen::Index j = 1; j <= n; ++j) {
    for (Eigen::Index i = j; i <= n; ++i) {
      Eigen::Index row = (j - 1) * n + i - j * (j - 1) / 2 - 1;
      Eigen::Index col = (j - 1) * n + (i - 1);
      vec_source_[static_cast<std::size_t>(row)] = col;
    }
  }
}

Vector EliminationMatrix::applyRvec(const Vector& v) const {
  if (v.size() != cols()) throw std::invalid_argument("EliminationMatrix: size mismatch");
  Vector out(rows());
  for (Eigen::Index r = 0; r < rows(); ++r) {
    auto [i, j] = entryForRow(r);
    // entry (i, j) of a symmetric matrix, read from the row-major layout
    out[r] = v[i * n_ + j];
  }
  return out;
}

Matrix EliminationMatrix::dense() const {
  Matrix L = Matrix::Zero(rows(), cols());
  for (Eigen::Index r = 0; r < rows(); ++r) L(r, vec_source_[static_cast<std::size_t>(r)]) = 1.0;
  return L;
}

std::pair<Eigen::Index, Eigen::Index> EliminationMatrix::entryForRow(Eigen::Index r) const {
  Eigen::Index v = vec_source_[static_cast<std::size_t>(r)];
  Eigen::Index j = v / n_;  // column-major: column index
  Eigen::Index i = v % n_;
  return {i, j};
}

}  // namespace netf
