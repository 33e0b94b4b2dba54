#pragma once

#include <Eigen/Dense>
#include <vector>

namespace netf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Row-major vectorisation: rvec(A)[i*cols + j] = A(i, j).
// Equivalent to the column-major vec of A^T.
Vector rvec(const Matrix& A);

// Inverse of rvec. Throws std::invalid_argument on length mismatch.
Matrix rvec_inv(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// Kronecker product A (x) B.
Matrix kron(const Matrix& A, const Matrix& B);

// Permutation matrix K such that K * rvec(A) = rvec(A^T) for any m x n A.
// Stored as an index permutation; sizes reach (dC)^2 downstream, so it is
// never materialised unless asked for.
class CommutationMatrix {
 public:
  CommutationMatrix(Eigen::Index m, Eigen::Index n);

  Eigen::Index size() const { return static_cast<Eigen::Index>(source_.size()); }
  Eigen::Index rows() const { return m_; }
  Eigen::Index cols() const { return n_; }

  Vector apply(const Vector& v) const;
  Matrix applyLeft(const Matrix& A) const;   // K * A
  Matrix applyRight(const Matrix& A) const;  // A * K
  Matrix dense() const;

 private:
  Eigen::Index m_, n_;
  std::vector<Eigen::Index> source_;  // result[t] = v[source_[t]]
};

// Elimination matrix L_n of shape n(n+1)/2 x n^2 selecting the lower
// triangle. Built from the explicit u_ij construction; for a symmetric S
// its action on rvec(S) yields the n(n+1)/2 non-redundant entries.
class EliminationMatrix {
 public:
  explicit EliminationMatrix(Eigen::Index n);

  Eigen::Index n() const { return n_; }
  Eigen::Index rows() const { return n_ * (n_ + 1) / 2; }
  Eigen::Index cols() const { return n_ * n_; }

  // L * rvec(S); exact for symmetric S, where rvec and vec coincide.
  Vector applyRvec(const Vector& v) const;
  Matrix dense() const;

  // Row r selects matrix entry (i, j), i >= j, 0-based.
  std::pair<Eigen::Index, Eigen::Index> entryForRow(Eigen::Index r) const;

 private:
  Eigen::Index n_;
  std::vector<Eigen::Index> vec_source_;  // column-major vec index per row
};

}  // namespace netf
