#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "adasketch/projection.hpp"
#include "oracles.hpp"

using namespace adasketch;

namespace {

std::vector<FiberSeriesd> grid_fibers(const std::vector<std::vector<double>>& values, Index j_dim) {
  std::vector<FiberSeriesd> fibers;
  for (std::size_t n = 0; n < values.size(); ++n)
    fibers.push_back(FiberSeriesd::from_values(static_cast<Index>(n) % j_dim,
                                               static_cast<Index>(n) / j_dim, values[n]));
  return fibers;
}

}  // namespace

TEST_CASE("train_random_models degenerate and determinism cases") {
  std::mt19937_64 rng(101);
  std::vector<std::vector<double>> values;
  for (int n = 0; n < 6; ++n) values.push_back(oracles::simulate_arma({0.5}, {}, 0, 1.0, 60, rng));
  const auto fibers = grid_fibers(values, 3);

  const auto all = train_random_models(fibers, 6, 1, ArimaOrder{1, 0, 0});
  CHECK(all.size() == 6);

  const auto one = train_random_models(fibers, 1, 1, ArimaOrder{1, 0, 0});
  CHECK(one.size() == 1);
  const auto assignment = assign_buckets(fibers, one);
  for (int b : assignment.bucket) CHECK(b == 0);

  // Same seed, same models.
  const auto a = train_random_models(fibers, 3, 42, ArimaOrder{1, 0, 0});
  const auto b = train_random_models(fibers, 3, 42, ArimaOrder{1, 0, 0});
  REQUIRE(a.size() == b.size());
  for (std::size_t m = 0; m < a.size(); ++m) {
    CHECK((a[m].alpha() - b[m].alpha()).norm() == 0);
    CHECK(a[m].bias() == b[m].bias());
  }
}

TEST_CASE("train_random_models skips ineligible fibers and errors out of draws") {
  std::mt19937_64 rng(103);
  std::vector<std::vector<double>> values;
  values.push_back(oracles::simulate_arma({0.5}, {}, 0, 1.0, 60, rng));
  values.push_back(std::vector<double>(60, 0.0));      // all-zero: ineligible
  values.push_back(std::vector<double>(4, 1.0));       // too short: ineligible
  const auto fibers = grid_fibers(values, 3);
  const auto models = train_random_models(fibers, 1, 7, ArimaOrder{1, 0, 0});
  CHECK(models.size() == 1);
  CHECK_THROWS_AS(train_random_models(fibers, 2, 7, ArimaOrder{1, 0, 0}), std::invalid_argument);
}

TEST_CASE("assignment purity on two planted AR clusters") {
  std::mt19937_64 rng(107);
  std::vector<std::vector<double>> values;
  const int per_cluster = 20;
  for (int n = 0; n < per_cluster; ++n)
    values.push_back(oracles::simulate_arma({0.9}, {}, 0, 1.0, 80, rng));
  for (int n = 0; n < per_cluster; ++n)
    values.push_back(oracles::simulate_arma({-0.7}, {}, 0, 1.0, 80, rng));
  const auto fibers = grid_fibers(values, 5);

  // One model per cluster, fit on a known member fiber.
  std::vector<ArimaModeld> models;
  models.push_back(fit_arima(values[0], 1, 0, 0));
  models.push_back(fit_arima(values[per_cluster], 1, 0, 0));
  const auto assignment = assign_buckets(fibers, models);

  int correct = 0;
  for (int n = 0; n < 2 * per_cluster; ++n)
    if (assignment.bucket[static_cast<std::size_t>(n)] == (n < per_cluster ? 0 : 1)) ++correct;
  CHECK(correct >= static_cast<int>(0.9 * 2 * per_cluster));

  // A model's own training fiber sits in its bucket.
  CHECK(assignment.bucket[0] == 0);
  CHECK(assignment.bucket[per_cluster] == 1);

  // The chosen bucket never fits worse than any fixed model.
  for (std::size_t n = 0; n < fibers.size(); ++n) {
    double chosen = std::numeric_limits<double>::infinity();
    double first = 0;
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto preds = one_step_predictions(models[m], fibers[n].values);
      double sse = 0;
      for (const auto& [t, pred] : preds) {
        const double r = fibers[n].values[static_cast<std::size_t>(t)] - pred;
        sse += r * r;
      }
      const double rmse = std::sqrt(sse / static_cast<double>(preds.size()));
      if (m == static_cast<std::size_t>(assignment.bucket[n])) chosen = rmse;
      if (m == 0) first = rmse;
    }
    CHECK(chosen <= first + 1e-12);
  }
}

TEST_CASE("ties break toward the lowest bucket index") {
  std::mt19937_64 rng(109);
  std::vector<std::vector<double>> values;
  for (int n = 0; n < 4; ++n) values.push_back(oracles::simulate_arma({0.6}, {}, 0, 1.0, 50, rng));
  const auto fibers = grid_fibers(values, 2);
  const auto model = fit_arima(values[0], 1, 0, 0);
  const std::vector<ArimaModeld> twins{model.coefficients_only(), model.coefficients_only()};
  const auto assignment = assign_buckets(fibers, twins);
  for (int b : assignment.bucket) CHECK(b == 0);
}

TEST_CASE("all-zero fibers land in the zero bucket") {
  std::mt19937_64 rng(113);
  std::vector<std::vector<double>> values;
  values.push_back(oracles::simulate_arma({0.6}, {}, 0, 1.0, 50, rng));
  values.push_back(std::vector<double>(50, 0.0));
  const auto fibers = grid_fibers(values, 2);
  const auto models = train_random_models(fibers, 1, 3, ArimaOrder{1, 0, 0});
  const auto assignment = assign_buckets(fibers, models);
  CHECK(assignment.bucket[1] == assignment.model_count);
  CHECK(assignment.zero_bucket_count == 1);
  CHECK(assignment.weights[0] == 1);
}

TEST_CASE("aggregate_coefficients weighted mean and zero padding") {
  BucketAssignment assignment;
  assignment.model_count = 2;
  assignment.weights = {3, 1};
  std::vector<ArimaModeld> models;
  Vector<double> a1(1), a2(1);
  a1 << 0.6;
  a2 << 0.2;
  models.emplace_back(ArimaOrder{1, 0, 0}, a1, Vector<double>(), 0.0);
  models.emplace_back(ArimaOrder{1, 0, 0}, a2, Vector<double>(), 0.0);
  const auto agg = aggregate_coefficients(assignment, models, 1);
  CHECK(agg.alpha_bar[0] == doctest::Approx(0.5).epsilon(1e-15));

  // Zero padding to a larger p.
  const auto padded = aggregate_coefficients(assignment, models, 3);
  CHECK(padded.alpha_bar[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(padded.alpha_bar[1] == 0.0);
  CHECK(padded.alpha_bar[2] == 0.0);

  // Single bucket reproduces that model's coefficients.
  assignment.weights = {4, 0};
  const auto solo = aggregate_coefficients(assignment, models, 1);
  CHECK(solo.alpha_bar[0] == doctest::Approx(0.6).epsilon(1e-15));

  // Invariant to bucket relabeling.
  BucketAssignment swapped = assignment;
  swapped.weights = {0, 4};
  std::vector<ArimaModeld> reversed{models[1], models[0]};
  const auto relabeled = aggregate_coefficients(swapped, reversed, 1);
  CHECK(relabeled.alpha_bar[0] == doctest::Approx(solo.alpha_bar[0]).epsilon(1e-15));

  // No assigned fibers at all is a configuration error.
  assignment.weights = {0, 0};
  CHECK_THROWS_AS(aggregate_coefficients(assignment, models, 1), std::invalid_argument);
}

TEST_CASE("model and bucket persistence round trip") {
  std::mt19937_64 rng(127);
  std::vector<std::vector<double>> values;
  for (int n = 0; n < 4; ++n)
    values.push_back(oracles::simulate_arma({0.5, -0.2}, {}, 0.1, 1.0, 60, rng));
  const auto fibers = grid_fibers(values, 2);
  const auto models = train_random_models(fibers, 2, 5, ArimaOrder{2, 0, 0});
  const auto assignment = assign_buckets(fibers, models);
  const auto agg = aggregate_coefficients(assignment, models, 3);

  const auto dir = std::filesystem::temp_directory_path() / "adasketch_proj_test";
  std::filesystem::create_directories(dir);
  const std::string models_path = (dir / "models.json").string();
  const std::string buckets_path = (dir / "buckets.txt").string();
  write_models(models, agg, models_path);
  write_buckets(assignment, buckets_path);

  const auto [models_back, agg_back] = read_models<double>(models_path);
  REQUIRE(models_back.size() == models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    CHECK((models_back[m].alpha() - models[m].alpha()).norm() == 0);
    CHECK(models_back[m].bias() == models[m].bias());
  }
  CHECK(agg_back.p == agg.p);
  CHECK((agg_back.alpha_bar - agg.alpha_bar).norm() == 0);

  const auto assignment_back = read_buckets(buckets_path, assignment.model_count);
  CHECK(assignment_back.bucket == assignment.bucket);
  CHECK(assignment_back.weights == assignment.weights);
  std::filesystem::remove_all(dir);
}
