#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace latnet {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexList = std::vector<Index>;

/// Induced matrix 1-norm: maximum absolute column sum.
template <typename Derived>
typename Derived::Scalar norm_1(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

/// Induced matrix inf-norm: maximum absolute row sum.
template <typename Derived>
typename Derived::Scalar norm_inf(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Spectral norm (largest singular value).
template <typename Derived>
typename Derived::Scalar norm_2(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0;
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::JacobiSVD<M> svd(a.eval());
  return svd.singularValues()(0);
}

/// Largest absolute entry.
template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0;
  return a.cwiseAbs().maxCoeff();
}

/// Rows `rows` and columns `cols` of `a`, copied into a dense matrix.
template <typename Derived>
Matrix submatrix(const Eigen::MatrixBase<Derived>& a, const IndexList& rows, const IndexList& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

template <typename Derived>
Vector subvector(const Eigen::MatrixBase<Derived>& v, const IndexList& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (Index i = 0; i < out.size(); ++i) out(i) = v(idx[i]);
  return out;
}

/// 1-norm condition number computed from an explicit inverse.
inline double condition_1(const Matrix& a, const Matrix& a_inv) {
  return norm_1(a) * norm_1(a_inv);
}

}  // namespace latnet
