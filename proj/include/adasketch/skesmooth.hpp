#pragma once

// Weighted CP factorization of a sketched tensor with the AR-smoothness
// penalty on the temporal factors:
//
//   f(A,B,C) = 1/2 ||Y - W*[[A,B,C]]||_F^2 + rho/2 ||L A||_F^2
//
// where the data term runs over observed entries only.  Gradients are
//
//   G1 = -(Y(1) - Z(1))(C kr B) + rho L^T L A
//   G2 = -(Y(2) - Z(2))(C kr A)
//   G3 = -(Y(3) - Z(3))(B kr A),   Z = W*[[A,B,C]]
//
// computed with the sparse MTTKRP over the residual (which is supported on
// the mask only) and the banded regularizer products.  The optimizer is
// L-BFGS on the stacked parameter vector [vec A; vec B; vec C].

#include <algorithm>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "adasketch/common.hpp"
#include "adasketch/lbfgs.hpp"
#include "adasketch/regularizer.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

template <typename Scalar>
struct FactorizationConfig {
  Index rank = 5;
  Scalar rho = 600;
  int max_iterations = 500;
  Scalar gradient_tolerance = 1e-6;
  unsigned seed = 0;
  int lbfgs_memory = 5;

  void validate() const {
    require(rank >= 1, "factorization: rank must be >= 1");
    require(rho >= 0, "factorization: rho must be nonnegative");
    require(max_iterations >= 1, "factorization: max_iterations must be >= 1");
    require(gradient_tolerance > 0, "factorization: gradient tolerance must be positive");
    require(lbfgs_memory >= 1, "factorization: lbfgs memory must be >= 1");
  }
};

template <typename Scalar>
struct FactorizationResult {
  KruskalModel<Scalar> model;
  std::vector<Scalar> objective_trace;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

namespace detail {

/// All observed coordinates with their sketch values (zero where the sketch
/// stores nothing).  The data term and its gradients run over this list, not
/// over the sketch's nonzeros.
template <typename Scalar>
std::vector<typename SparseTensor<Scalar>::Entry> observed_entries(
    const SparseTensor<Scalar>& sketch, const MaskTensor& mask) {
  require(sketch.dims() == mask.dims(), "sketch and mask dims must agree");
  const auto& stored = sketch.entries();
  for (const auto& e : stored)
    require(mask.observed(e.i, e.j, e.k), "sketch entry outside the observation mask");
  std::vector<typename SparseTensor<Scalar>::Entry> out;
  out.reserve(static_cast<std::size_t>(mask.observed_count()));
  std::size_t cursor = 0;
  mask.for_each_observed([&](Index i, Index j, Index k) {
    Scalar value = 0;
    while (cursor < stored.size()) {
      const auto& e = stored[cursor];
      const auto lhs = std::array<Index, 3>{e.i, e.j, e.k};
      const auto rhs = std::array<Index, 3>{i, j, k};
      if (lhs < rhs) {
        ++cursor;
        continue;
      }
      if (lhs == rhs) value = e.value;
      break;
    }
    out.push_back({i, j, k, value});
  });
  return out;
}

template <typename Scalar>
void fill_residuals(std::vector<typename SparseTensor<Scalar>::Entry>& residuals,
                    const std::vector<typename SparseTensor<Scalar>::Entry>& observed,
                    const Matrix<Scalar>& A, const Matrix<Scalar>& B, const Matrix<Scalar>& C) {
  residuals = observed;
  for (auto& e : residuals) {
    const Scalar z = A.row(e.i).cwiseProduct(B.row(e.j)).dot(C.row(e.k));
    e.value -= z;
  }
}

}  // namespace detail

/// Eq-style objective value.  rho may be zero, in which case the regularizer
/// is skipped entirely.
template <typename Scalar>
Scalar objective(const SparseTensor<Scalar>& sketch, const MaskTensor& mask,
                 const KruskalModel<Scalar>& model, const RegularizerMatrix<Scalar>& reg,
                 Scalar rho) {
  require(model.dims() == sketch.dims(), "objective: model dims do not match the sketch");
  require(rho >= 0, "objective: rho must be nonnegative");
  auto entries = detail::observed_entries(sketch, mask);
  Scalar f = 0;
  for (const auto& e : entries) {
    const Scalar r = e.value - model.value(e.i, e.j, e.k);
    f += r * r;
  }
  f *= Scalar(0.5);
  if (rho > 0) {
    require(reg.size() == model.dims().i, "objective: regularizer size mismatch");
    f += Scalar(0.5) * rho * reg.apply(model.A).squaredNorm();
  }
  return f;
}

template <typename Scalar>
std::tuple<Matrix<Scalar>, Matrix<Scalar>, Matrix<Scalar>> gradients(
    const SparseTensor<Scalar>& sketch, const MaskTensor& mask, const KruskalModel<Scalar>& model,
    const RegularizerMatrix<Scalar>& reg, Scalar rho) {
  require(model.dims() == sketch.dims(), "gradients: model dims do not match the sketch");
  require(rho >= 0, "gradients: rho must be nonnegative");
  auto residuals = detail::observed_entries(sketch, mask);
  for (auto& e : residuals) e.value -= model.value(e.i, e.j, e.k);
  const Dims dims = sketch.dims();
  Matrix<Scalar> g1 = -mttkrp<Scalar>(dims, residuals, model.A, model.B, model.C, 1);
  Matrix<Scalar> g2 = -mttkrp<Scalar>(dims, residuals, model.A, model.B, model.C, 2);
  Matrix<Scalar> g3 = -mttkrp<Scalar>(dims, residuals, model.A, model.B, model.C, 3);
  if (rho > 0) {
    require(reg.size() == dims.i, "gradients: regularizer size mismatch");
    g1 += rho * reg.gram_apply(model.A);
  }
  return {std::move(g1), std::move(g2), std::move(g3)};
}

/// Runs L-BFGS from a seeded uniform(0,1) initialization.  Factors are packed
/// [vec A; vec B; vec C] column-major, filled from the generator in that
/// order.  No nonnegativity constraint is enforced.
template <typename Scalar>
FactorizationResult<Scalar> factorize(const SparseTensor<Scalar>& sketch, const MaskTensor& mask,
                                      const FactorizationConfig<Scalar>& config,
                                      const RegularizerMatrix<Scalar>& reg) {
  config.validate();
  require(sketch.nnz() > 0, "factorize: sketch has no entries");
  const Dims dims = sketch.dims();
  if (config.rho > 0)
    require(reg.size() == dims.i, "factorize: regularizer size does not match the temporal mode");
  const Index R = config.rank;
  const Index na = dims.i * R, nb = dims.j * R, nc = dims.k * R;

  const auto observed = detail::observed_entries(sketch, mask);

  struct Eval {
    Dims dims;
    Index R;
    Scalar rho;
    const RegularizerMatrix<Scalar>* reg;
    const std::vector<typename SparseTensor<Scalar>::Entry>* observed;
    std::vector<typename SparseTensor<Scalar>::Entry> residuals;
    Matrix<Scalar> A, B, C;

    Scalar operator()(const Vector<Scalar>& x, Vector<Scalar>& grad) {
      const Index na = dims.i * R, nb = dims.j * R, nc = dims.k * R;
      A = Eigen::Map<const Matrix<Scalar>>(x.data(), dims.i, R);
      B = Eigen::Map<const Matrix<Scalar>>(x.data() + na, dims.j, R);
      C = Eigen::Map<const Matrix<Scalar>>(x.data() + na + nb, dims.k, R);
      detail::fill_residuals<Scalar>(residuals, *observed, A, B, C);
      Scalar f = 0;
      for (const auto& e : residuals) f += e.value * e.value;
      f *= Scalar(0.5);
      Matrix<Scalar> g1 = -mttkrp<Scalar>(dims, residuals, A, B, C, 1);
      Matrix<Scalar> g2 = -mttkrp<Scalar>(dims, residuals, A, B, C, 2);
      Matrix<Scalar> g3 = -mttkrp<Scalar>(dims, residuals, A, B, C, 3);
      if (rho > 0) {
        const Matrix<Scalar> la = reg->apply(A);
        f += Scalar(0.5) * rho * la.squaredNorm();
        g1 += rho * reg->apply_transpose(la);
      }
      Eigen::Map<Matrix<Scalar>>(grad.data(), dims.i, R) = g1;
      Eigen::Map<Matrix<Scalar>>(grad.data() + na, dims.j, R) = g2;
      Eigen::Map<Matrix<Scalar>>(grad.data() + na + nb, dims.k, R) = g3;
      return f;
    }
  };

  Eval eval{dims, R, config.rho, &reg, &observed, {}, {}, {}, {}};

  Vector<Scalar> x0(na + nb + nc);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Index n = 0; n < x0.size(); ++n) x0[n] = static_cast<Scalar>(uniform(rng));

  LbfgsOptions options;
  options.memory = config.lbfgs_memory;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = static_cast<double>(config.gradient_tolerance);
  LbfgsResult<Scalar> solve = lbfgs_minimize(eval, std::move(x0), options);

  Matrix<Scalar> A = Eigen::Map<const Matrix<Scalar>>(solve.x.data(), dims.i, R);
  Matrix<Scalar> B = Eigen::Map<const Matrix<Scalar>>(solve.x.data() + na, dims.j, R);
  Matrix<Scalar> C = Eigen::Map<const Matrix<Scalar>>(solve.x.data() + na + nb, dims.k, R);
  return FactorizationResult<Scalar>{
      KruskalModel<Scalar>(std::move(A), std::move(B), std::move(C)),
      std::move(solve.objective_trace), solve.converged, solve.iterations,
      std::move(solve.message)};
}

/// Completed tensor: observed entries verbatim from the sketch, missing
/// entries filled from the model.
template <typename Scalar>
DenseTensor<Scalar> complete_tensor(const SparseTensor<Scalar>& sketch, const MaskTensor& mask,
                                    const KruskalModel<Scalar>& model) {
  require(sketch.dims() == mask.dims(), "complete_tensor: dims mismatch");
  require(model.dims() == sketch.dims(), "complete_tensor: model dims mismatch");
  const Dims& d = sketch.dims();
  const DenseTensor<Scalar> dense_sketch = sketch.densify();
  Vector<Scalar> values(d.count());
  Index offset = 0;
  for (Index k = 0; k < d.k; ++k)
    for (Index j = 0; j < d.j; ++j)
      for (Index i = 0; i < d.i; ++i)
        values[offset++] = mask.observed(i, j, k) ? dense_sketch(i, j, k) : model.value(i, j, k);
  return DenseTensor<Scalar>(d, std::move(values));
}

using FactorizationConfigd = FactorizationConfig<double>;
using FactorizationResultd = FactorizationResult<double>;

}  // namespace adasketch
