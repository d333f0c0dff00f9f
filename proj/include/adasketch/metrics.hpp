#pragma once

// Evaluation metrics: factor match score between two CP solutions, tensor
// completion score on the unobserved entries, and a stream RMSE helper.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include "adasketch/arima.hpp"
#include "adasketch/common.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

struct MatchReport {
  double fms = 0;
  std::vector<Index> column_matching;     // estimate column matched to each reference column
  std::vector<double> component_scores;   // per matched pair, already clamped to [0,1]
  std::vector<double> congruences;        // cosine products before the norm penalty
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> weighted_temporal_factor(const KruskalModel<Scalar>& model) {
  Matrix<Scalar> a = model.A;
  for (Index r = 0; r < model.rank(); ++r) a.col(r) *= model.lambda[r];
  return a;
}

template <typename Scalar>
Matrix<Scalar> pad_columns(const Matrix<Scalar>& m, Index rank) {
  if (m.cols() == rank) return m;
  Matrix<Scalar> out = Matrix<Scalar>::Zero(m.rows(), rank);
  out.leftCols(m.cols()) = m;
  return out;
}

}  // namespace detail

/// Factor match score between two Kruskal models.  Per component the score is
/// the product of per-mode cosines scaled by the column-norm agreement
/// 1 - |xi - xi_bar| / max(xi, xi_bar), averaged over components.  Columns are
/// aligned first by greedy maximum-congruence matching, since CP solutions are
/// only defined up to column permutation and scale.  Lambda weights are
/// absorbed into the temporal factor before scoring; zero-norm columns
/// contribute 0 with a warning.
template <typename Scalar>
MatchReport fms(const KruskalModel<Scalar>& reference, const KruskalModel<Scalar>& estimate) {
  const Index rank = std::max(reference.rank(), estimate.rank());
  const Matrix<Scalar> refs[3] = {detail::pad_columns<Scalar>(detail::weighted_temporal_factor(reference), rank),
                                  detail::pad_columns<Scalar>(reference.B, rank),
                                  detail::pad_columns<Scalar>(reference.C, rank)};
  const Matrix<Scalar> ests[3] = {detail::pad_columns<Scalar>(detail::weighted_temporal_factor(estimate), rank),
                                  detail::pad_columns<Scalar>(estimate.B, rank),
                                  detail::pad_columns<Scalar>(estimate.C, rank)};

  bool warned = false;
  Matrix<double> congruence = Matrix<double>::Zero(rank, rank);
  for (Index r = 0; r < rank; ++r)
    for (Index s = 0; s < rank; ++s) {
      double product = 1;
      for (int mode = 0; mode < 3; ++mode) {
        const double nr = static_cast<double>(refs[mode].col(r).norm());
        const double ns = static_cast<double>(ests[mode].col(s).norm());
        if (nr == 0 || ns == 0) {
          if (!warned) {
            std::cerr << "warning: fms encountered a zero-norm factor column\n";
            warned = true;
          }
          product = 0;
          break;
        }
        product *= static_cast<double>(refs[mode].col(r).dot(ests[mode].col(s))) / (nr * ns);
      }
      congruence(r, s) = product;
    }

  // Greedy matching on the congruence matrix; strict improvement keeps the
  // scan order (and hence the tie-break) deterministic.
  MatchReport report;
  report.column_matching.assign(static_cast<std::size_t>(rank), -1);
  std::vector<bool> ref_used(static_cast<std::size_t>(rank), false);
  std::vector<bool> est_used(static_cast<std::size_t>(rank), false);
  for (Index step = 0; step < rank; ++step) {
    Index best_r = -1, best_s = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Index r = 0; r < rank; ++r) {
      if (ref_used[static_cast<std::size_t>(r)]) continue;
      for (Index s = 0; s < rank; ++s) {
        if (est_used[static_cast<std::size_t>(s)]) continue;
        if (congruence(r, s) > best) {
          best = congruence(r, s);
          best_r = r;
          best_s = s;
        }
      }
    }
    ref_used[static_cast<std::size_t>(best_r)] = true;
    est_used[static_cast<std::size_t>(best_s)] = true;
    report.column_matching[static_cast<std::size_t>(best_r)] = best_s;
  }

  double total = 0;
  report.component_scores.resize(static_cast<std::size_t>(rank));
  report.congruences.resize(static_cast<std::size_t>(rank));
  for (Index r = 0; r < rank; ++r) {
    const Index s = report.column_matching[static_cast<std::size_t>(r)];
    double xi_ref = 1, xi_est = 1;
    for (int mode = 0; mode < 3; ++mode) {
      xi_ref *= static_cast<double>(refs[mode].col(r).norm());
      xi_est *= static_cast<double>(ests[mode].col(s).norm());
    }
    const double largest = std::max(xi_ref, xi_est);
    double score = 0;
    if (largest > 0)
      score = (1.0 - std::abs(xi_ref - xi_est) / largest) * congruence(r, s);
    score = std::clamp(score, 0.0, 1.0);
    report.congruences[static_cast<std::size_t>(r)] = congruence(r, s);
    report.component_scores[static_cast<std::size_t>(r)] = score;
    total += score;
  }
  report.fms = total / static_cast<double>(rank);
  return report;
}

/// Relative error on the unobserved entries:
/// ||(1-W)*(X - Xbar)||_F / ||(1-W)*X||_F.
template <typename Scalar>
double tcs(const DenseTensor<Scalar>& truth, const DenseTensor<Scalar>& completed,
           const MaskTensor& mask) {
  require(truth.dims() == completed.dims() && truth.dims() == mask.dims(),
          "tcs: dims mismatch");
  const Dims& d = truth.dims();
  double num = 0, den = 0;
  for (Index k = 0; k < d.k; ++k)
    for (Index j = 0; j < d.j; ++j)
      for (Index i = 0; i < d.i; ++i) {
        if (mask.observed(i, j, k)) continue;
        const double x = static_cast<double>(truth(i, j, k));
        const double diff = x - static_cast<double>(completed(i, j, k));
        num += diff * diff;
        den += x * x;
      }
  if (den == 0)
    throw std::domain_error("tcs: no unobserved signal; the score is undefined");
  return std::sqrt(num / den);
}

/// RMSE over the timestamps both series share.
template <typename Scalar>
double stream_rmse(const FiberSeries<Scalar>& predictions, const FiberSeries<Scalar>& actuals) {
  double sse = 0;
  Index count = 0;
  std::size_t a = 0, b = 0;
  while (a < predictions.times.size() && b < actuals.times.size()) {
    if (predictions.times[a] < actuals.times[b]) {
      ++a;
    } else if (predictions.times[a] > actuals.times[b]) {
      ++b;
    } else {
      const double diff = static_cast<double>(predictions.values[a] - actuals.values[b]);
      sse += diff * diff;
      ++count;
      ++a;
      ++b;
    }
  }
  if (count == 0) throw std::domain_error("stream_rmse: series share no timestamps");
  return std::sqrt(sse / static_cast<double>(count));
}

}  // namespace adasketch
