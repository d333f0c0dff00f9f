#pragma once

// Banded I x I smoothness operator built from aggregated AR coefficients.
// Row i (0-based) carries a 1 at column i-p and -alpha_j at column i-p+j for
// j = 1..p; columns below zero are truncated, so the first p rows are the
// clipped prefix of the band.  ||L A||_F^2 then penalizes temporal factor
// rows that violate the learned autoregression.  Products with L and L^T walk
// the band directly in O(I*p*R); the dense matrix is only materialized for
// tests.

#include <utility>

#include "adasketch/common.hpp"
#include "adasketch/projection.hpp"

namespace adasketch {

template <typename Scalar>
class RegularizerMatrix {
 public:
  RegularizerMatrix(Index size, Vector<Scalar> alpha) : size_(size), alpha_(std::move(alpha)) {
    require(size_ >= 1, "regularizer: size must be positive");
    require(alpha_.size() < size_, "regularizer: lag order must be below the matrix size");
    require(alpha_.allFinite(), "regularizer: coefficients must be finite");
  }

  Index size() const { return size_; }
  int lag_order() const { return static_cast<int>(alpha_.size()); }
  const Vector<Scalar>& alpha() const { return alpha_; }

  /// Band coefficient of row i at offset o in 0..p (column i - p + o), where
  /// offset p is the -alpha_p end of the band.
  Scalar band_coefficient(int offset) const {
    return offset == 0 ? Scalar(1) : -alpha_[offset - 1];
  }

  /// L * A without forming L.
  Matrix<Scalar> apply(const Matrix<Scalar>& a) const {
    require(a.rows() == size_, "regularizer: row count mismatch");
    const int p = lag_order();
    Matrix<Scalar> out = Matrix<Scalar>::Zero(a.rows(), a.cols());
    for (Index i = 0; i < size_; ++i)
      for (int o = 0; o <= p; ++o) {
        const Index col = i - p + o;
        if (col < 0) continue;
        out.row(i) += band_coefficient(o) * a.row(col);
      }
    return out;
  }

  /// L^T * Y without forming L.
  Matrix<Scalar> apply_transpose(const Matrix<Scalar>& y) const {
    require(y.rows() == size_, "regularizer: row count mismatch");
    const int p = lag_order();
    Matrix<Scalar> out = Matrix<Scalar>::Zero(y.rows(), y.cols());
    for (Index i = 0; i < size_; ++i)
      for (int o = 0; o <= p; ++o) {
        const Index col = i - p + o;
        if (col < 0) continue;
        out.row(col) += band_coefficient(o) * y.row(i);
      }
    return out;
  }

  /// L^T (L A); the Gram matrix itself is never formed.
  Matrix<Scalar> gram_apply(const Matrix<Scalar>& a) const { return apply_transpose(apply(a)); }

  Matrix<Scalar> to_dense() const {
    const int p = lag_order();
    Matrix<Scalar> out = Matrix<Scalar>::Zero(size_, size_);
    for (Index i = 0; i < size_; ++i)
      for (int o = 0; o <= p; ++o) {
        const Index col = i - p + o;
        if (col < 0) continue;
        out(i, col) = band_coefficient(o);
      }
    return out;
  }

 private:
  Index size_;
  Vector<Scalar> alpha_;
};

template <typename Scalar>
RegularizerMatrix<Scalar> build_regularizer(const AggregatedCoefficients<Scalar>& coefficients,
                                            Index size) {
  return RegularizerMatrix<Scalar>(size, coefficients.alpha_bar);
}

using RegularizerMatrixd = RegularizerMatrix<double>;

}  // namespace adasketch
