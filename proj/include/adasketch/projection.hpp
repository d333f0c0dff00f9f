#pragma once

// Random projection of ARIMA coefficients: train L models on randomly chosen
// fibers, map every fiber to the model with the lowest one-step-ahead RMSE
// over the training window, and aggregate the AR coefficients of the buckets
// into one weighted average.  Fibers that are identically zero in the
// training window go to a dedicated zero bucket (index L) and contribute
// neither coefficients nor weight.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "adasketch/arima.hpp"
#include "adasketch/common.hpp"

namespace adasketch {

struct BucketAssignment {
  int model_count = 0;                         // L; bucket index L is the zero bucket
  std::vector<std::array<Index, 2>> locations; // fiber (j,k), aligned with bucket
  std::vector<int> bucket;
  std::vector<Index> weights;                  // fibers per model bucket, zero bucket excluded
  Index zero_bucket_count = 0;

  Index fiber_count() const { return static_cast<Index>(bucket.size()); }
};

template <typename Scalar>
struct AggregatedCoefficients {
  int p = 0;
  Vector<Scalar> alpha_bar;
};

inline Index default_model_count(Index fiber_count) {
  return std::max<Index>(1, (fiber_count + 99) / 100);
}

namespace detail {

template <typename Scalar>
bool all_zero(const std::vector<Scalar>& values) {
  return std::all_of(values.begin(), values.end(), [](Scalar v) { return v == Scalar(0); });
}

template <typename Scalar>
double prediction_rmse(const ArimaModel<Scalar>& model, const std::vector<Scalar>& values) {
  const auto preds = one_step_predictions(model, values);
  if (preds.empty()) return std::numeric_limits<double>::infinity();
  double sse = 0;
  for (const auto& [t, pred] : preds) {
    const double r = static_cast<double>(values[static_cast<std::size_t>(t)] - pred);
    sse += r * r;
  }
  return std::sqrt(sse / static_cast<double>(preds.size()));
}

}  // namespace detail

/// Fits L models on L distinct fibers drawn uniformly without replacement.
/// Too-short and all-zero fibers are skipped and redrawn; running out of
/// eligible fibers is a configuration error.  With aic set, each drawn fiber
/// gets an AIC-selected order instead of the fixed one.
template <typename Scalar>
std::vector<ArimaModel<Scalar>> train_random_models(const std::vector<FiberSeries<Scalar>>& fibers,
                                                    Index L, unsigned seed,
                                                    ArimaOrder order = ArimaOrder{},
                                                    bool aic = false) {
  const Index M = static_cast<Index>(fibers.size());
  require(L >= 1 && L <= M, "train_random_models: need 1 <= L <= fiber count");
  std::vector<Index> draw_order(static_cast<std::size_t>(M));
  std::iota(draw_order.begin(), draw_order.end(), Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(draw_order.begin(), draw_order.end(), rng);

  std::vector<ArimaModel<Scalar>> models;
  models.reserve(static_cast<std::size_t>(L));
  for (Index idx : draw_order) {
    if (static_cast<Index>(models.size()) == L) break;
    const FiberSeries<Scalar>& fiber = fibers[static_cast<std::size_t>(idx)];
    if (fiber.size() < order.p + order.d + order.q + 10) continue;
    if (detail::all_zero(fiber.values)) continue;
    models.push_back(aic ? fit_arima_auto(fiber.values)
                         : fit_arima(fiber.values, order.p, order.d, order.q));
  }
  if (static_cast<Index>(models.size()) < L)
    throw std::invalid_argument("train_random_models: fewer than L fit-eligible fibers");
  return models;
}

/// Maps each fiber to the model minimizing one-step-ahead RMSE over the
/// fiber's training window; ties break toward the lowest bucket index.
template <typename Scalar>
BucketAssignment assign_buckets(const std::vector<FiberSeries<Scalar>>& fibers,
                                const std::vector<ArimaModel<Scalar>>& models) {
  require(!models.empty(), "assign_buckets: need at least one model");
  const int L = static_cast<int>(models.size());
  BucketAssignment out;
  out.model_count = L;
  out.weights.assign(static_cast<std::size_t>(L), 0);
  out.locations.reserve(fibers.size());
  out.bucket.reserve(fibers.size());
  for (const FiberSeries<Scalar>& fiber : fibers) {
    out.locations.push_back({fiber.j, fiber.k});
    if (detail::all_zero(fiber.values)) {
      out.bucket.push_back(L);
      ++out.zero_bucket_count;
      continue;
    }
    int best = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (int m = 0; m < L; ++m) {
      const double rmse = detail::prediction_rmse(models[static_cast<std::size_t>(m)], fiber.values);
      if (rmse < best_rmse) {
        best_rmse = rmse;
        best = m;
      }
    }
    out.bucket.push_back(best);
    ++out.weights[static_cast<std::size_t>(best)];
  }
  return out;
}

/// Weighted average of the per-bucket AR coefficients, weights = fiber counts.
/// Models with fewer than p lags are zero-padded.
template <typename Scalar>
AggregatedCoefficients<Scalar> aggregate_coefficients(const BucketAssignment& assignment,
                                                      const std::vector<ArimaModel<Scalar>>& models,
                                                      int p) {
  require(static_cast<int>(models.size()) == assignment.model_count,
          "aggregate_coefficients: model count mismatch");
  for (const auto& model : models)
    require(model.order().p <= p, "aggregate_coefficients: p below a model's lag order");
  Index total = 0;
  Vector<Scalar> alpha_bar = Vector<Scalar>::Zero(p);
  for (std::size_t m = 0; m < models.size(); ++m) {
    const Index w = assignment.weights[m];
    if (w == 0) continue;
    total += w;
    alpha_bar.head(models[m].order().p) += Scalar(w) * models[m].alpha();
  }
  if (total == 0)
    throw std::invalid_argument("aggregate_coefficients: no fibers assigned to any model");
  alpha_bar /= Scalar(total);
  return AggregatedCoefficients<Scalar>{p, std::move(alpha_bar)};
}

// --- persistence -----------------------------------------------------------

template <typename Scalar>
void write_models(const std::vector<ArimaModel<Scalar>>& models,
                  const AggregatedCoefficients<Scalar>& aggregated, const std::string& path) {
  nlohmann::json doc;
  doc["models"] = nlohmann::json::array();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& model = models[m];
    nlohmann::json rec;
    rec["id"] = m;
    rec["p"] = model.order().p;
    rec["d"] = model.order().d;
    rec["q"] = model.order().q;
    rec["alpha"] = std::vector<double>(model.alpha().data(), model.alpha().data() + model.alpha().size());
    rec["beta"] = std::vector<double>(model.beta().data(), model.beta().data() + model.beta().size());
    rec["c"] = static_cast<double>(model.bias());
    doc["models"].push_back(std::move(rec));
  }
  doc["aggregated"] = {{"p", aggregated.p},
                       {"alpha", std::vector<double>(aggregated.alpha_bar.data(),
                                                     aggregated.alpha_bar.data() +
                                                         aggregated.alpha_bar.size())}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
}

template <typename Scalar>
std::pair<std::vector<ArimaModel<Scalar>>, AggregatedCoefficients<Scalar>> read_models(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  nlohmann::json doc;
  in >> doc;
  std::vector<ArimaModel<Scalar>> models;
  for (const auto& rec : doc.at("models")) {
    const ArimaOrder order{rec.at("p").get<int>(), rec.at("d").get<int>(), rec.at("q").get<int>()};
    const auto a = rec.at("alpha").get<std::vector<double>>();
    const auto b = rec.at("beta").get<std::vector<double>>();
    Vector<Scalar> alpha(a.size()), beta(b.size());
    for (std::size_t n = 0; n < a.size(); ++n) alpha[static_cast<Index>(n)] = static_cast<Scalar>(a[n]);
    for (std::size_t n = 0; n < b.size(); ++n) beta[static_cast<Index>(n)] = static_cast<Scalar>(b[n]);
    models.emplace_back(order, std::move(alpha), std::move(beta),
                        static_cast<Scalar>(rec.at("c").get<double>()));
  }
  const auto& agg = doc.at("aggregated");
  const auto a = agg.at("alpha").get<std::vector<double>>();
  AggregatedCoefficients<Scalar> aggregated;
  aggregated.p = agg.at("p").get<int>();
  aggregated.alpha_bar.resize(a.size());
  for (std::size_t n = 0; n < a.size(); ++n)
    aggregated.alpha_bar[static_cast<Index>(n)] = static_cast<Scalar>(a[n]);
  return {std::move(models), std::move(aggregated)};
}

inline void write_buckets(const BucketAssignment& assignment, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (std::size_t n = 0; n < assignment.bucket.size(); ++n)
    out << assignment.locations[n][0] << ' ' << assignment.locations[n][1] << ' '
        << assignment.bucket[n] << '\n';
}

inline BucketAssignment read_buckets(const std::string& path, int model_count) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  BucketAssignment out;
  out.model_count = model_count;
  out.weights.assign(static_cast<std::size_t>(model_count), 0);
  Index j, k;
  int bucket;
  while (in >> j >> k >> bucket) {
    require(bucket >= 0 && bucket <= model_count, path + ": bucket index out of range");
    out.locations.push_back({j, k});
    out.bucket.push_back(bucket);
    if (bucket == model_count)
      ++out.zero_bucket_count;
    else
      ++out.weights[static_cast<std::size_t>(bucket)];
  }
  return out;
}

}  // namespace adasketch
