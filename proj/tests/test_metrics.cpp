#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "adasketch/metrics.hpp"
#include "oracles.hpp"

using namespace adasketch;
using oracles::Matrixd;
using oracles::Vectord;

TEST_CASE("fms of a model with itself is 1") {
  std::mt19937_64 rng(191);
  const KruskalModeld model = oracles::random_model({6, 5, 4}, 3, rng);
  const MatchReport report = fms(model, model);
  CHECK(report.fms == doctest::Approx(1.0).epsilon(1e-12));
  for (Index r = 0; r < 3; ++r) CHECK(report.column_matching[static_cast<std::size_t>(r)] == r);
}

TEST_CASE("fms is invariant to column permutation and cross-factor rescaling") {
  std::mt19937_64 rng(193);
  const KruskalModeld model = oracles::random_model({6, 5, 4}, 3, rng);

  // Permute columns (0,1,2) -> (2,0,1), scale one factor's column by s and
  // compensate on another factor.
  const std::vector<Index> perm{2, 0, 1};
  Matrixd A(6, 3), B(5, 3), C(4, 3);
  for (Index r = 0; r < 3; ++r) {
    A.col(perm[static_cast<std::size_t>(r)]) = model.A.col(r);
    B.col(perm[static_cast<std::size_t>(r)]) = model.B.col(r);
    C.col(perm[static_cast<std::size_t>(r)]) = model.C.col(r);
  }
  const double s = 4.0;
  A.col(0) *= s;
  B.col(0) /= s;
  const KruskalModeld shuffled(A, B, C);
  CHECK(fms(model, shuffled).fms == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fms hand-computed rank-1 example") {
  const KruskalModeld reference(Matrixd::Ones(2, 1), Matrixd::Ones(2, 1), Matrixd::Ones(2, 1));
  Matrixd a(2, 1);
  a << 1, 0;
  const KruskalModeld estimate(a, Matrixd::Ones(2, 1), Matrixd::Ones(2, 1));

  // Direct evaluation of the score formula.
  const double cos_a = 1.0 / std::sqrt(2.0);
  const double xi_ref = std::sqrt(2.0) * std::sqrt(2.0) * std::sqrt(2.0);
  const double xi_est = 1.0 * std::sqrt(2.0) * std::sqrt(2.0);
  const double expected = (1.0 - (xi_ref - xi_est) / xi_ref) * cos_a;
  CHECK(fms(reference, estimate).fms == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fms pads rank mismatches and zeroes degenerate columns") {
  std::mt19937_64 rng(197);
  const KruskalModeld big = oracles::random_model({5, 4, 3}, 3, rng, 0.1, 1.0);
  const KruskalModeld small(big.A.leftCols(2), big.B.leftCols(2), big.C.leftCols(2));
  const MatchReport report = fms(big, small);
  CHECK(report.fms == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  Matrixd zeroed = big.A;
  zeroed.col(1).setZero();
  const KruskalModeld degenerate(zeroed, big.B, big.C);
  const MatchReport degenerate_report = fms(big, degenerate);
  CHECK(degenerate_report.fms >= 0.0);
  CHECK(degenerate_report.fms <= 1.0);
}

TEST_CASE("fms stays within [0,1] on random pairs") {
  std::mt19937_64 rng(199);
  for (int rep = 0; rep < 20; ++rep) {
    const KruskalModeld a = oracles::random_model({5, 4, 3}, 3, rng);
    const KruskalModeld b = oracles::random_model({5, 4, 3}, 3, rng);
    const double score = fms(a, b).fms;
    CHECK(score >= 0.0);
    CHECK(score <= 1.0);
  }
}

TEST_CASE("fms absorbs lambda weights") {
  std::mt19937_64 rng(211);
  KruskalModeld model = oracles::random_model({5, 4, 3}, 2, rng);
  KruskalModeld weighted = model;
  weighted.lambda << 3.0, 0.5;
  weighted.A.col(0) /= 3.0;
  weighted.A.col(1) *= 2.0;
  CHECK(fms(model, weighted).fms == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tcs trivial and oracle cases") {
  std::mt19937_64 rng(223);
  const Dims dims{6, 4, 3};
  const KruskalModeld truth_model = oracles::random_model(dims, 2, rng, 0.2, 1.0);
  const DenseTensord truth = truth_model.reconstruct();
  const MaskTensor mask(dims, {0, 2});

  CHECK(tcs(truth, truth, mask) == 0.0);

  // Zero fill on the missing entries scores exactly 1.
  Vector<double> zero_filled = truth.values();
  for (Index i = 0; i < dims.i; ++i)
    for (Index j = 0; j < dims.j; ++j)
      for (Index k = 0; k < dims.k; ++k)
        if (!mask.observed(i, j, k)) zero_filled[i + dims.i * (j + dims.j * k)] = 0;
  CHECK(tcs(truth, DenseTensord(dims, zero_filled), mask) == doctest::Approx(1.0).epsilon(1e-15));

  // Brute-force loop over the definition.
  const DenseTensord completed = oracles::random_model(dims, 2, rng, 0.2, 1.0).reconstruct();
  double num = 0, den = 0;
  for (Index i = 0; i < dims.i; ++i)
    for (Index j = 0; j < dims.j; ++j)
      for (Index k = 0; k < dims.k; ++k) {
        if (mask.observed(i, j, k)) continue;
        num += (truth(i, j, k) - completed(i, j, k)) * (truth(i, j, k) - completed(i, j, k));
        den += truth(i, j, k) * truth(i, j, k);
      }
  CHECK(tcs(truth, completed, mask) == doctest::Approx(std::sqrt(num / den)).epsilon(1e-12));
}

TEST_CASE("tcs ignores observed entries entirely") {
  std::mt19937_64 rng(227);
  const Dims dims{5, 3, 3};
  const DenseTensord truth = oracles::random_model(dims, 2, rng, 0.2, 1.0).reconstruct();
  const MaskTensor mask(dims, {1, 3});
  const DenseTensord completed = oracles::random_model(dims, 2, rng, 0.2, 1.0).reconstruct();
  const double base = tcs(truth, completed, mask);

  Vector<double> tweaked = completed.values();
  for (Index j = 0; j < dims.j; ++j)
    for (Index k = 0; k < dims.k; ++k) tweaked[1 + dims.i * (j + dims.j * k)] += 100.0;
  CHECK(tcs(truth, DenseTensord(dims, tweaked), mask) == base);
}

TEST_CASE("tcs with no unobserved signal is an error") {
  const Dims dims{3, 2, 2};
  const DenseTensord zero(dims);
  const MaskTensor full = MaskTensor::full(dims);
  CHECK_THROWS_AS(tcs(zero, zero, full), std::domain_error);
  const MaskTensor partial(dims, {0});
  CHECK_THROWS_AS(tcs(zero, zero, partial), std::domain_error);  // missing entries all zero
}

TEST_CASE("stream_rmse on aligned and offset series") {
  const auto a = FiberSeriesd::from_values(0, 0, {1.0, 2.0, 3.0, 4.0});
  CHECK(stream_rmse(a, a) == 0.0);

  const auto b = FiberSeriesd::from_values(0, 0, {2.0, 3.0, 4.0, 5.0});
  CHECK(stream_rmse(a, b) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(229);
  std::uniform_real_distribution<double> dist(-2, 2);
  std::vector<double> u(50), v(50);
  for (auto& x : u) x = dist(rng);
  for (auto& x : v) x = dist(rng);
  double sse = 0;
  for (int n = 0; n < 50; ++n) sse += (u[n] - v[n]) * (u[n] - v[n]);
  CHECK(stream_rmse(FiberSeriesd::from_values(0, 0, u), FiberSeriesd::from_values(0, 0, v)) ==
        doctest::Approx(std::sqrt(sse / 50)).epsilon(1e-12));
}

TEST_CASE("stream_rmse respects timestamps and rejects empty overlap") {
  const FiberSeriesd a(0, 0, {0, 2, 4}, {1.0, 2.0, 3.0});
  const FiberSeriesd b(0, 0, {2, 3, 4}, {2.0, 9.0, 3.0});
  CHECK(stream_rmse(a, b) == 0.0);  // only t=2 and t=4 align, both equal

  const FiberSeriesd c(0, 0, {10, 11}, {1.0, 1.0});
  CHECK_THROWS_AS(stream_rmse(a, c), std::domain_error);
}
