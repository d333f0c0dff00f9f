#pragma once

// Synthetic spatio-temporal streams with planted low-rank structure: temporal
// factor columns follow AR processes (optionally with step bursts), spatial
// factor columns are positive Gaussian-bump mixtures, and iid noise is added
// on top.  The planted Kruskal model is returned alongside the tensor so
// recovery can be scored exactly.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "adasketch/common.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

template <typename Scalar>
struct SyntheticSpec {
  struct Burst {
    Index t = 0;
    Scalar magnitude = 0;  // added to the mean slice value while active
    Index duration = 1;
  };

  Dims dims{120, 8, 8};
  Index rank = 3;
  std::vector<Vector<Scalar>> ar;   // per-component AR coefficients; shared default below
  Scalar innovation_sigma = 1.0;
  Scalar temporal_base = 3.0;       // level added to each temporal column
  Index spatial_bumps = 2;
  Scalar noise_sigma = 0;           // absolute observation noise
  Scalar noise_rel = 0;             // if > 0, noise sigma = noise_rel * signal RMS
  std::vector<Burst> bursts;
  bool nonneg = true;
  unsigned seed = 0;

  /// AR(3) with the default aggregate coefficients, so the planted temporal
  /// factors match what the smoothness regularizer expects.
  static Vector<Scalar> default_ar() {
    Vector<Scalar> a(3);
    a << Scalar(0.55), Scalar(-0.19), Scalar(0.04);
    return a;
  }

  void validate() const {
    require(dims.i > 0 && dims.j > 0 && dims.k > 0, "synthetic: dims must be positive");
    require(rank >= 1, "synthetic: rank must be >= 1");
    require(innovation_sigma >= 0 && noise_sigma >= 0 && noise_rel >= 0,
            "synthetic: sigmas must be nonnegative");
    require(temporal_base >= 0, "synthetic: temporal base must be nonnegative");
    require(spatial_bumps >= 1, "synthetic: need at least one spatial bump");
    for (const auto& burst : bursts) {
      require(burst.t >= 0 && burst.t < dims.i, "synthetic: burst time out of range");
      require(burst.duration >= 1, "synthetic: burst duration must be >= 1");
    }
    for (const auto& coeffs : ar)
      require(coeffs.size() < dims.i, "synthetic: AR order must be below the stream length");
  }
};

namespace detail {

/// Positive bump-mixture column over positions 0..n-1, normalized to unit
/// mean so fiber levels stay comparable across the grid.
template <typename Scalar>
Vector<Scalar> bump_column(Index n, Index bumps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> position(0.0, static_cast<double>(n));
  std::uniform_real_distribution<double> amplitude(0.5, 1.5);
  std::uniform_real_distribution<double> width(static_cast<double>(n) / 8.0,
                                               static_cast<double>(n) / 3.0);
  Vector<Scalar> col = Vector<Scalar>::Constant(n, Scalar(0.3));
  for (Index b = 0; b < bumps; ++b) {
    const double center = position(rng);
    const double amp = amplitude(rng);
    const double w = width(rng);
    for (Index i = 0; i < n; ++i) {
      const double d = (static_cast<double>(i) - center) / w;
      col[i] += static_cast<Scalar>(amp * std::exp(-0.5 * d * d));
    }
  }
  col /= col.mean();
  return col;
}

/// AR path with a burn-in so the process starts in its stationary regime.
template <typename Scalar>
Vector<Scalar> ar_column(Index n, const Vector<Scalar>& coeffs, Scalar sigma,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> innovation(0.0, static_cast<double>(sigma));
  const Index p = coeffs.size();
  const Index burn = 100;
  std::vector<Scalar> path(static_cast<std::size_t>(burn + n), Scalar(0));
  for (Index t = 0; t < burn + n; ++t) {
    Scalar v = static_cast<Scalar>(innovation(rng));
    for (Index lag = 1; lag <= p && lag <= t; ++lag)
      v += coeffs[lag - 1] * path[static_cast<std::size_t>(t - lag)];
    path[static_cast<std::size_t>(t)] = v;
  }
  Vector<Scalar> col(n);
  for (Index t = 0; t < n; ++t) col[t] = path[static_cast<std::size_t>(burn + t)];
  return col;
}

}  // namespace detail

/// Generates the tensor [[A,B,C]] + noise together with the planted model.
/// Deterministic given the seed; draws happen in a fixed order (B, C, A,
/// noise).
template <typename Scalar>
std::pair<DenseTensor<Scalar>, KruskalModel<Scalar>> generate(const SyntheticSpec<Scalar>& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Dims& d = spec.dims;
  const Index R = spec.rank;

  Matrix<Scalar> B(d.j, R), C(d.k, R);
  for (Index r = 0; r < R; ++r) B.col(r) = detail::bump_column<Scalar>(d.j, spec.spatial_bumps, rng);
  for (Index r = 0; r < R; ++r) C.col(r) = detail::bump_column<Scalar>(d.k, spec.spatial_bumps, rng);

  Matrix<Scalar> A(d.i, R);
  for (Index r = 0; r < R; ++r) {
    const Vector<Scalar>& coeffs =
        spec.ar.empty() ? SyntheticSpec<Scalar>::default_ar()
                        : spec.ar[static_cast<std::size_t>(r) % spec.ar.size()];
    Vector<Scalar> col = detail::ar_column<Scalar>(d.i, coeffs, spec.innovation_sigma, rng);
    col.array() += spec.temporal_base;
    if (spec.nonneg) {
      const Scalar lo = col.minCoeff();
      if (lo < 0) col.array() -= lo;
    }
    A.col(r) = col;
  }

  // Bursts hit the first component, scaled so the mean slice value shifts by
  // the requested magnitude while the burst is active.
  const Scalar spatial_mean = B.col(0).mean() * C.col(0).mean();
  for (const auto& burst : spec.bursts) {
    const Index end = std::min(d.i, burst.t + burst.duration);
    for (Index t = burst.t; t < end; ++t) A(t, 0) += burst.magnitude / spatial_mean;
  }

  KruskalModel<Scalar> planted(std::move(A), std::move(B), std::move(C));
  DenseTensor<Scalar> signal = planted.reconstruct();

  Scalar sigma = spec.noise_sigma;
  if (spec.noise_rel > 0)
    sigma = spec.noise_rel * std::sqrt(signal.squared_norm() / Scalar(d.count()));

  Vector<Scalar> values = signal.values();
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, static_cast<double>(sigma));
    for (Index n = 0; n < values.size(); ++n) values[n] += static_cast<Scalar>(noise(rng));
  }
  return {DenseTensor<Scalar>(d, std::move(values)), std::move(planted)};
}

using SyntheticSpecd = SyntheticSpec<double>;

}  // namespace adasketch
