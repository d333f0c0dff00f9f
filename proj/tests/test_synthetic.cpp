#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "adasketch/synthetic.hpp"
#include "oracles.hpp"

using namespace adasketch;
using oracles::Matrixd;

TEST_CASE("noise-free generation has numerical rank exactly R") {
  SyntheticSpecd spec;
  spec.dims = {40, 10, 9};
  spec.rank = 3;
  spec.noise_sigma = 0;
  spec.seed = 2;
  const auto [tensor, planted] = generate(spec);

  const Matrixd unfolding = matricize(tensor, 1);
  Eigen::BDCSVD<Matrixd> svd(unfolding);
  const auto& sv = svd.singularValues();
  CHECK(sv[2] / sv[0] > 1e-10);
  CHECK(sv[3] / sv[0] < 1e-10);

  // Tensor equals the planted reconstruction exactly.
  CHECK((tensor.values() - planted.reconstruct().values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generation is deterministic under a fixed seed") {
  SyntheticSpecd spec;
  spec.dims = {30, 6, 6};
  spec.rank = 2;
  spec.noise_sigma = 0.5;
  spec.bursts = {{12, 5.0, 3}};
  spec.seed = 77;
  const auto [t1, m1] = generate(spec);
  const auto [t2, m2] = generate(spec);
  CHECK((t1.values() - t2.values()).norm() == 0);
  CHECK((m1.A - m2.A).norm() == 0);
}

TEST_CASE("bursts raise the mean slice value by the configured magnitude") {
  SyntheticSpecd spec;
  spec.dims = {60, 8, 8};
  spec.rank = 2;
  spec.noise_sigma = 0;
  spec.innovation_sigma = 0.2;
  const double magnitude = 10.0;
  spec.bursts = {{40, magnitude, 4}};
  spec.seed = 9;
  const auto [tensor, planted] = generate(spec);

  auto slice_mean = [&](Index t) {
    double sum = 0;
    for (Index j = 0; j < spec.dims.j; ++j)
      for (Index k = 0; k < spec.dims.k; ++k) sum += tensor(t, j, k);
    return sum / static_cast<double>(spec.dims.j * spec.dims.k);
  };
  double pre = 0;
  for (Index t = 30; t < 40; ++t) pre += slice_mean(t);
  pre /= 10;
  const double jump = slice_mean(40) - pre;
  CHECK(jump == doctest::Approx(magnitude).epsilon(0.2));
}

TEST_CASE("observation noise has near-zero mean") {
  SyntheticSpecd spec;
  spec.dims = {40, 10, 10};
  spec.rank = 2;
  spec.noise_sigma = 1.0;
  spec.seed = 13;
  const auto [tensor, planted] = generate(spec);
  const double mean_residual =
      (tensor.values() - planted.reconstruct().values()).mean();
  const double bound = 3.0 * spec.noise_sigma / std::sqrt(static_cast<double>(spec.dims.count()));
  CHECK(std::abs(mean_residual) <= bound);
}

TEST_CASE("relative noise scales with the signal") {
  SyntheticSpecd spec;
  spec.dims = {30, 6, 6};
  spec.rank = 2;
  spec.noise_rel = 0.05;
  spec.seed = 31;
  const auto [tensor, planted] = generate(spec);
  const auto signal = planted.reconstruct();
  const double signal_rms = std::sqrt(signal.squared_norm() / signal.values().size());
  const double noise_rms =
      std::sqrt((tensor.values() - signal.values()).squaredNorm() / signal.values().size());
  CHECK(noise_rms == doctest::Approx(0.05 * signal_rms).epsilon(0.15));
}

TEST_CASE("nonneg flag keeps the planted temporal factors nonnegative") {
  SyntheticSpecd spec;
  spec.dims = {50, 5, 5};
  spec.rank = 3;
  spec.seed = 17;
  const auto [tensor, planted] = generate(spec);
  CHECK(planted.A.minCoeff() >= 0.0);
  CHECK(planted.B.minCoeff() > 0.0);
  CHECK(planted.C.minCoeff() > 0.0);
}

TEST_CASE("default AR coefficients match the aggregate regularizer defaults") {
  const auto ar = SyntheticSpecd::default_ar();
  CHECK(ar[0] == 0.55);
  CHECK(ar[1] == -0.19);
  CHECK(ar[2] == 0.04);
}

TEST_CASE("spec validation") {
  SyntheticSpecd spec;
  spec.dims = {10, 4, 4};
  spec.bursts = {{20, 1.0, 1}};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.bursts.clear();
  spec.noise_sigma = -1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
