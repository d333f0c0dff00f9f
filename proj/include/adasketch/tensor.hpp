#pragma once

// Dense, sparse and masked 3-mode tensors plus the multilinear kernels used
// throughout: Khatri-Rao products, matricization, MTTKRP and Kruskal
// reconstruction.
//
// Layout convention (fixed repo-wide): values are linearized with the first
// mode fastest, offset(i,j,k) = i + I*(j + J*k).  Mode-n unfoldings follow the
// standard ordering where the remaining modes vary with the lower mode
// fastest:
//   X(1) is I x (J*K),  column j + J*k
//   X(2) is J x (I*K),  column i + I*k
//   X(3) is K x (I*J),  column i + I*j
// Under this convention X(1) = A (C kr B)^T, X(2) = B (C kr A)^T and
// X(3) = C (B kr A)^T for a Kruskal tensor [[A,B,C]], which is the factor
// order assumed by the gradient code in skesmooth.hpp.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "adasketch/common.hpp"

namespace adasketch {

template <typename Scalar>
class DenseTensor {
 public:
  explicit DenseTensor(Dims dims)
      : dims_(dims), values_(Vector<Scalar>::Zero(dims.count())) {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "tensor dims must be positive");
  }

  DenseTensor(Dims dims, Vector<Scalar> values)
      : dims_(dims), values_(std::move(values)) {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "tensor dims must be positive");
    require(values_.size() == dims.count(), "value count does not match dims");
    require(values_.allFinite(), "tensor values must be finite");
  }

  const Dims& dims() const { return dims_; }

  Scalar operator()(Index i, Index j, Index k) const {
    return values_[i + dims_.i * (j + dims_.j * k)];
  }

  const Vector<Scalar>& values() const { return values_; }

  /// The mode-1 unfolding is a free view thanks to the linearization order.
  Eigen::Map<const Matrix<Scalar>> mode1_view() const {
    return Eigen::Map<const Matrix<Scalar>>(values_.data(), dims_.i, dims_.j * dims_.k);
  }

  Scalar squared_norm() const { return values_.squaredNorm(); }

 private:
  Dims dims_;
  Vector<Scalar> values_;
};

template <typename Scalar>
class SparseTensor {
 public:
  struct Entry {
    Index i, j, k;
    Scalar value;
  };

  explicit SparseTensor(Dims dims) : dims_(dims) {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "tensor dims must be positive");
  }

  /// Entries are sorted by (i,j,k) at construction so iteration order is
  /// deterministic.  Out-of-range indices, non-finite values and duplicate
  /// coordinates are rejected.
  SparseTensor(Dims dims, std::vector<Entry> entries)
      : dims_(dims), entries_(std::move(entries)) {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "tensor dims must be positive");
    for (const Entry& e : entries_) {
      require(e.i >= 0 && e.i < dims_.i && e.j >= 0 && e.j < dims_.j && e.k >= 0 &&
                  e.k < dims_.k,
              "sparse entry index out of range");
      require(std::isfinite(static_cast<double>(e.value)), "sparse entry must be finite");
    }
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      return std::array<Index, 3>{a.i, a.j, a.k} < std::array<Index, 3>{b.i, b.j, b.k};
    });
    for (std::size_t n = 1; n < entries_.size(); ++n) {
      const Entry& a = entries_[n - 1];
      const Entry& b = entries_[n];
      require(a.i != b.i || a.j != b.j || a.k != b.k, "duplicate sparse entry");
    }
  }

  const Dims& dims() const { return dims_; }
  Index nnz() const { return static_cast<Index>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  Scalar squared_norm() const {
    Scalar s = 0;
    for (const Entry& e : entries_) s += e.value * e.value;
    return s;
  }

  DenseTensor<Scalar> densify() const {
    Vector<Scalar> values = Vector<Scalar>::Zero(dims_.count());
    for (const Entry& e : entries_) values[e.i + dims_.i * (e.j + dims_.j * e.k)] = e.value;
    return DenseTensor<Scalar>(dims_, std::move(values));
  }

 private:
  Dims dims_;
  std::vector<Entry> entries_;
};

/// Binary weight tensor.  The common case is slice-structured: whole time
/// slices are either observed or missing, so membership depends only on i.
/// An optional entry-level set covers general masks; those entries must not
/// fall inside an observed slice.
class MaskTensor {
 public:
  explicit MaskTensor(Dims dims) : dims_(dims) {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "mask dims must be positive");
  }

  MaskTensor(Dims dims, std::vector<Index> observed_slices,
             std::vector<std::array<Index, 3>> extra_entries = {})
      : dims_(dims),
        slices_(std::move(observed_slices)),
        extra_(std::move(extra_entries)) {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "mask dims must be positive");
    std::sort(slices_.begin(), slices_.end());
    slices_.erase(std::unique(slices_.begin(), slices_.end()), slices_.end());
    for (Index t : slices_) require(t >= 0 && t < dims_.i, "observed slice out of range");
    std::sort(extra_.begin(), extra_.end());
    extra_.erase(std::unique(extra_.begin(), extra_.end()), extra_.end());
    for (const auto& e : extra_) {
      require(e[0] >= 0 && e[0] < dims_.i && e[1] >= 0 && e[1] < dims_.j && e[2] >= 0 &&
                  e[2] < dims_.k,
              "mask entry out of range");
      require(!slice_observed(e[0]), "mask entry duplicates an observed slice");
    }
  }

  static MaskTensor full(Dims dims) {
    std::vector<Index> all(static_cast<std::size_t>(dims.i));
    for (Index t = 0; t < dims.i; ++t) all[static_cast<std::size_t>(t)] = t;
    return MaskTensor(dims, std::move(all));
  }

  const Dims& dims() const { return dims_; }
  const std::vector<Index>& observed_slices() const { return slices_; }
  const std::vector<std::array<Index, 3>>& extra_entries() const { return extra_; }
  bool is_slice_structured() const { return extra_.empty(); }

  bool slice_observed(Index i) const {
    return std::binary_search(slices_.begin(), slices_.end(), i);
  }

  bool observed(Index i, Index j, Index k) const {
    if (slice_observed(i)) return true;
    return std::binary_search(extra_.begin(), extra_.end(), std::array<Index, 3>{i, j, k});
  }

  Index observed_count() const {
    return static_cast<Index>(slices_.size()) * dims_.j * dims_.k +
           static_cast<Index>(extra_.size());
  }

  /// Visits every observed coordinate in (i,j,k)-lexicographic order, the
  /// same order SparseTensor keeps its entries in.
  template <typename Fn>
  void for_each_observed(Fn&& fn) const {
    std::size_t next_extra = 0;
    for (Index t : slices_) {
      while (next_extra < extra_.size() && extra_[next_extra][0] < t) {
        const auto& e = extra_[next_extra++];
        fn(e[0], e[1], e[2]);
      }
      for (Index j = 0; j < dims_.j; ++j)
        for (Index k = 0; k < dims_.k; ++k) fn(t, j, k);
    }
    while (next_extra < extra_.size()) {
      const auto& e = extra_[next_extra++];
      fn(e[0], e[1], e[2]);
    }
  }

 private:
  Dims dims_;
  std::vector<Index> slices_;
  std::vector<std::array<Index, 3>> extra_;
};

/// CP decomposition output: factor matrices plus per-column weights.  Factors
/// are stored unnormalized; lambda defaults to all ones.
template <typename Scalar>
struct KruskalModel {
  Matrix<Scalar> A;  // I x R, temporal factors
  Matrix<Scalar> B;  // J x R
  Matrix<Scalar> C;  // K x R
  Vector<Scalar> lambda;

  KruskalModel(Matrix<Scalar> a, Matrix<Scalar> b, Matrix<Scalar> c,
               Vector<Scalar> weights = Vector<Scalar>())
      : A(std::move(a)), B(std::move(b)), C(std::move(c)), lambda(std::move(weights)) {
    require(A.cols() == B.cols() && B.cols() == C.cols(),
            "factor matrices must share the column count");
    require(A.cols() >= 1, "rank must be at least 1");
    if (lambda.size() == 0) lambda = Vector<Scalar>::Ones(A.cols());
    require(lambda.size() == A.cols(), "lambda length must equal the rank");
    require(A.allFinite() && B.allFinite() && C.allFinite() && lambda.allFinite(),
            "factor entries must be finite");
  }

  Index rank() const { return A.cols(); }
  Dims dims() const { return Dims{A.rows(), B.rows(), C.rows()}; }

  Scalar value(Index i, Index j, Index k) const {
    Scalar s = 0;
    for (Index r = 0; r < rank(); ++r) s += lambda[r] * A(i, r) * B(j, r) * C(k, r);
    return s;
  }

  DenseTensor<Scalar> reconstruct() const {
    const Dims d = dims();
    Vector<Scalar> values(d.count());
    Index offset = 0;
    for (Index k = 0; k < d.k; ++k)
      for (Index j = 0; j < d.j; ++j)
        for (Index i = 0; i < d.i; ++i) values[offset++] = value(i, j, k);
    return DenseTensor<Scalar>(d, std::move(values));
  }
};

/// Columnwise Kronecker product of two matrices with equal column counts.
/// Row (i1*rows2 + i2) of column r holds m1(i1,r)*m2(i2,r): the second
/// factor's index runs fastest, matching the unfolding convention above.
template <typename Scalar>
Matrix<Scalar> khatri_rao(const Matrix<Scalar>& m1, const Matrix<Scalar>& m2) {
  require(m1.cols() == m2.cols(), "khatri_rao: column counts differ");
  Matrix<Scalar> out(m1.rows() * m2.rows(), m1.cols());
  for (Index r = 0; r < m1.cols(); ++r)
    for (Index i1 = 0; i1 < m1.rows(); ++i1)
      out.col(r).segment(i1 * m2.rows(), m2.rows()) = m1(i1, r) * m2.col(r);
  return out;
}

namespace detail {

inline std::pair<Index, Index> unfolding_shape(const Dims& dims, int mode) {
  switch (mode) {
    case 1: return {dims.i, dims.j * dims.k};
    case 2: return {dims.j, dims.i * dims.k};
    default: return {dims.k, dims.i * dims.j};
  }
}

inline std::pair<Index, Index> unfolding_coords(const Dims& dims, int mode, Index i,
                                                Index j, Index k) {
  switch (mode) {
    case 1: return {i, j + dims.j * k};
    case 2: return {j, i + dims.i * k};
    default: return {k, i + dims.i * j};
  }
}

}  // namespace detail

template <typename Scalar>
Matrix<Scalar> matricize(const DenseTensor<Scalar>& tensor, int mode) {
  require_mode(mode);
  const Dims& d = tensor.dims();
  auto [rows, cols] = detail::unfolding_shape(d, mode);
  if (mode == 1) return tensor.mode1_view();
  Matrix<Scalar> out(rows, cols);
  for (Index k = 0; k < d.k; ++k)
    for (Index j = 0; j < d.j; ++j)
      for (Index i = 0; i < d.i; ++i) {
        auto [r, c] = detail::unfolding_coords(d, mode, i, j, k);
        out(r, c) = tensor(i, j, k);
      }
  return out;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar> matricize(const SparseTensor<Scalar>& tensor, int mode) {
  require_mode(mode);
  const Dims& d = tensor.dims();
  auto [rows, cols] = detail::unfolding_shape(d, mode);
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(tensor.nnz()));
  for (const auto& e : tensor.entries()) {
    auto [r, c] = detail::unfolding_coords(d, mode, e.i, e.j, e.k);
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), e.value);
  }
  Eigen::SparseMatrix<Scalar> out(static_cast<int>(rows), static_cast<int>(cols));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

/// Inverse of matricize for dense tensors.
template <typename Scalar>
DenseTensor<Scalar> fold(const Matrix<Scalar>& unfolding, int mode, Dims dims) {
  require_mode(mode);
  auto [rows, cols] = detail::unfolding_shape(dims, mode);
  require(unfolding.rows() == rows && unfolding.cols() == cols,
          "fold: matrix shape does not match dims");
  Vector<Scalar> values(dims.count());
  for (Index k = 0; k < dims.k; ++k)
    for (Index j = 0; j < dims.j; ++j)
      for (Index i = 0; i < dims.i; ++i) {
        auto [r, c] = detail::unfolding_coords(dims, mode, i, j, k);
        values[i + dims.i * (j + dims.j * k)] = unfolding(r, c);
      }
  return DenseTensor<Scalar>(dims, std::move(values));
}

/// MTTKRP over an explicit coordinate list.  Iterates the nonzeros once,
/// O(nnz*R), without materializing the Khatri-Rao product.  The reduction
/// order is the (sorted) entry order, so results are bit-stable.
template <typename Scalar>
Matrix<Scalar> mttkrp(const Dims& dims, const std::vector<typename SparseTensor<Scalar>::Entry>& entries,
                      const Matrix<Scalar>& A, const Matrix<Scalar>& B,
                      const Matrix<Scalar>& C, int mode) {
  require_mode(mode);
  require(A.rows() == dims.i && B.rows() == dims.j && C.rows() == dims.k,
          "mttkrp: factor rows do not match tensor dims");
  require(A.cols() == B.cols() && B.cols() == C.cols(),
          "mttkrp: factor column counts differ");
  const Index rank = A.cols();
  auto rows = detail::unfolding_shape(dims, mode).first;
  Matrix<Scalar> out = Matrix<Scalar>::Zero(rows, rank);
  for (const auto& e : entries) {
    switch (mode) {
      case 1:
        out.row(e.i) += e.value * (B.row(e.j).cwiseProduct(C.row(e.k)));
        break;
      case 2:
        out.row(e.j) += e.value * (A.row(e.i).cwiseProduct(C.row(e.k)));
        break;
      default:
        out.row(e.k) += e.value * (A.row(e.i).cwiseProduct(B.row(e.j)));
    }
  }
  return out;
}

/// T(n) times the Khatri-Rao product of the other two factors (mode 1 uses
/// C kr B, mode 2 C kr A, mode 3 B kr A).
template <typename Scalar>
Matrix<Scalar> mttkrp(const SparseTensor<Scalar>& tensor, const KruskalModel<Scalar>& model,
                      int mode) {
  require(model.dims() == tensor.dims(), "mttkrp: model dims do not match tensor dims");
  return mttkrp<Scalar>(tensor.dims(), tensor.entries(), model.A, model.B, model.C, mode);
}

/// Evaluates the model exactly at the observed positions of the mask; zero
/// elsewhere.  Model values that evaluate to zero are still stored so the
/// result has one entry per observed coordinate.
template <typename Scalar>
SparseTensor<Scalar> reconstruct_masked(const KruskalModel<Scalar>& model,
                                        const MaskTensor& mask) {
  require(model.dims() == mask.dims(), "reconstruct_masked: dims do not match");
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  entries.reserve(static_cast<std::size_t>(mask.observed_count()));
  mask.for_each_observed([&](Index i, Index j, Index k) {
    entries.push_back({i, j, k, model.value(i, j, k)});
  });
  return SparseTensor<Scalar>(mask.dims(), std::move(entries));
}

using DenseTensord = DenseTensor<double>;
using SparseTensord = SparseTensor<double>;
using KruskalModeld = KruskalModel<double>;

}  // namespace adasketch
