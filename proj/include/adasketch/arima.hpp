#pragma once

// Per-fiber ARIMA(p,d,q) forecasting.  The model acts on the d-times
// differenced series y_t:
//
//   y_t = c + sum_j alpha_j y_{t-j} + eps_t + sum_j beta_j eps_{t-j}
//
// and forecasts are integrated back to the original scale.  Fitting uses the
// two-stage Hannan-Rissanen procedure: a long autoregression estimates the
// innovation sequence, then the AR and MA coefficients come from one least
// squares solve on lagged values and lagged residuals.  Full maximum
// likelihood is deliberately avoided; controller feedback only needs
// coefficients in the right neighborhood.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "adasketch/common.hpp"

namespace adasketch {

struct ArimaOrder {
  int p = 3;  // AR lags
  int d = 0;  // differencing degree
  int q = 0;  // MA lags
};

/// A single location's time series.  Timestamps are strictly increasing;
/// gaps are allowed (sketched fibers are not contiguous).
template <typename Scalar>
struct FiberSeries {
  Index j = 0;
  Index k = 0;
  std::vector<Index> times;
  std::vector<Scalar> values;

  FiberSeries() = default;

  FiberSeries(Index j_, Index k_, std::vector<Index> t, std::vector<Scalar> v)
      : j(j_), k(k_), times(std::move(t)), values(std::move(v)) {
    require(times.size() == values.size(), "fiber times/values length mismatch");
    for (std::size_t n = 1; n < times.size(); ++n)
      require(times[n] > times[n - 1], "fiber timestamps must be strictly increasing");
    for (Scalar v_ : values)
      require(std::isfinite(static_cast<double>(v_)), "fiber values must be finite");
  }

  /// Contiguous series starting at t=0.
  static FiberSeries from_values(Index j_, Index k_, std::vector<Scalar> v) {
    std::vector<Index> t(v.size());
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = static_cast<Index>(n);
    return FiberSeries(j_, k_, std::move(t), std::move(v));
  }

  Index size() const { return static_cast<Index>(values.size()); }
};

namespace detail {

template <typename Scalar>
std::vector<Scalar> difference(const std::vector<Scalar>& values, int d) {
  std::vector<Scalar> out = values;
  for (int round = 0; round < d; ++round) {
    for (std::size_t n = 1; n < out.size(); ++n) out[n - 1] = out[n] - out[n - 1];
    out.pop_back();
  }
  return out;
}

/// Solves the normal equations of min ||X w - y||.  When the Gram matrix is
/// ill-conditioned (estimate above 1e12) a trace-scaled ridge term keeps the
/// solve stable.
template <typename Scalar>
Vector<Scalar> ridge_stabilized_solve(const Matrix<Scalar>& X, const Vector<Scalar>& y) {
  Matrix<Scalar> gram = X.transpose() * X;
  Vector<Scalar> rhs = X.transpose() * y;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eigen(gram);
  const Scalar lo = eigen.eigenvalues().minCoeff();
  const Scalar hi = eigen.eigenvalues().maxCoeff();
  if (!(lo > hi * Scalar(1e-12))) {
    const Scalar shift = Scalar(1e-8) * gram.trace() / Scalar(gram.rows());
    gram.diagonal().array() += shift;
  }
  return gram.ldlt().solve(rhs);
}

}  // namespace detail

template <typename Scalar>
class ArimaModel {
 public:
  ArimaModel(ArimaOrder order, Vector<Scalar> alpha, Vector<Scalar> beta, Scalar bias)
      : order_(order), alpha_(std::move(alpha)), beta_(std::move(beta)), bias_(bias) {
    require(order_.p >= 0 && order_.d >= 0 && order_.q >= 0, "arima orders must be >= 0");
    require(alpha_.size() == order_.p, "alpha length must equal p");
    require(beta_.size() == order_.q, "beta length must equal q");
    require(alpha_.allFinite() && beta_.allFinite() && std::isfinite(static_cast<double>(bias_)),
            "arima coefficients must be finite");
  }

  static ArimaModel bias_only(Scalar bias) {
    return ArimaModel(ArimaOrder{0, 0, 0}, Vector<Scalar>(), Vector<Scalar>(), bias);
  }

  const ArimaOrder& order() const { return order_; }
  const Vector<Scalar>& alpha() const { return alpha_; }
  const Vector<Scalar>& beta() const { return beta_; }
  Scalar bias() const { return bias_; }

  /// Enough history to difference d times and supply p AR lags.
  bool ready() const {
    return static_cast<int>(history_.size()) >= order_.p + order_.d;
  }

  /// One-step-ahead prediction on the original scale, with the future
  /// innovation taken as zero.
  Scalar forecast_one() const {
    if (!ready()) throw std::runtime_error("arima: insufficient state to forecast");
    std::vector<Scalar> level(history_.end() - (order_.p + order_.d), history_.end());
    Scalar integral = 0;
    for (int round = 0; round < order_.d; ++round) {
      integral += level.back();
      for (std::size_t n = 1; n < level.size(); ++n) level[n - 1] = level[n] - level[n - 1];
      level.pop_back();
    }
    Scalar y = bias_;
    for (int lag = 1; lag <= order_.p; ++lag)
      y += alpha_[lag - 1] * level[level.size() - static_cast<std::size_t>(lag)];
    for (int lag = 1; lag <= order_.q && lag <= static_cast<int>(residuals_.size()); ++lag)
      y += beta_[lag - 1] * residuals_[residuals_.size() - static_cast<std::size_t>(lag)];
    return y + integral;
  }

  /// Folds one observation into the state.  The residual is the observation
  /// minus the forecast from the previous state (zero while the model is
  /// still warming up).
  void observe(Scalar value) {
    require(std::isfinite(static_cast<double>(value)), "arima observation must be finite");
    const Scalar eps = ready() ? value - forecast_one() : Scalar(0);
    last_residual_ = eps;
    history_.push_back(value);
    const std::size_t window = static_cast<std::size_t>(order_.p + order_.d);
    if (history_.size() > window)
      history_.erase(history_.begin(), history_.end() - static_cast<std::ptrdiff_t>(window));
    if (order_.q > 0) {
      residuals_.push_back(eps);
      if (residuals_.size() > static_cast<std::size_t>(order_.q))
        residuals_.erase(residuals_.begin(),
                         residuals_.end() - static_cast<std::ptrdiff_t>(order_.q));
    }
  }

  /// Free-runs one step: the model consumes its own forecast, so the stored
  /// residual is exactly zero.  Used for unsampled slices.
  void observe_forecast() { observe(forecast_one()); }

  /// Clears the state and replays a history through the model.
  void prime(const std::vector<Scalar>& values) {
    reset_state();
    for (Scalar v : values) observe(v);
  }

  void reset_state() {
    history_.clear();
    residuals_.clear();
    last_residual_ = 0;
  }

  const std::vector<Scalar>& history() const { return history_; }
  const std::vector<Scalar>& residual_state() const { return residuals_; }

  /// Residual of the most recent observation.
  Scalar last_residual() const { return last_residual_; }

  /// Copy of the coefficients with a blank state; per-fiber forecasters share
  /// a bucket's coefficients but carry their own history.
  ArimaModel coefficients_only() const { return ArimaModel(order_, alpha_, beta_, bias_); }

 private:
  ArimaOrder order_;
  Vector<Scalar> alpha_;
  Vector<Scalar> beta_;
  Scalar bias_;
  std::vector<Scalar> history_;    // last p+d observed values
  std::vector<Scalar> residuals_;  // last q innovations
  Scalar last_residual_ = 0;
};

/// Conditional one-step-ahead predictions of a model replayed across a value
/// sequence from a blank state.  Returns (index, prediction) pairs for every
/// position where the model had enough history.
template <typename Scalar>
std::vector<std::pair<Index, Scalar>> one_step_predictions(const ArimaModel<Scalar>& model,
                                                           const std::vector<Scalar>& values) {
  ArimaModel<Scalar> replay = model.coefficients_only();
  std::vector<std::pair<Index, Scalar>> out;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (replay.ready()) out.emplace_back(static_cast<Index>(t), replay.forecast_one());
    replay.observe(values[t]);
  }
  return out;
}

template <typename Scalar>
ArimaModel<Scalar> fit_arima(const std::vector<Scalar>& values, int p, int d, int q) {
  const int min_len = p + d + q + 10;
  if (static_cast<int>(values.size()) < min_len)
    throw std::runtime_error("fit_arima: series too short (need at least " +
                             std::to_string(min_len) + " samples)");
  const ArimaOrder order{p, d, q};
  const std::vector<Scalar> y = detail::difference(values, d);
  const int n = static_cast<int>(y.size());

  Vector<Scalar> alpha = Vector<Scalar>::Zero(p);
  Vector<Scalar> beta = Vector<Scalar>::Zero(q);
  Scalar bias = 0;

  if (p == 0 && q == 0) {
    for (Scalar v : y) bias += v;
    bias /= Scalar(n);
  } else {
    // Stage 1: long-AR fit to estimate the innovation sequence (only needed
    // when MA terms are present).
    std::vector<Scalar> eps(static_cast<std::size_t>(n), Scalar(0));
    int h = 0;
    if (q > 0) {
      h = std::min(20, n / 4);
      h = std::max(h, 1);
      if (n - h < h + q + 2) throw std::runtime_error("fit_arima: series too short for MA stage");
      Matrix<Scalar> X(n - h, h + 1);
      Vector<Scalar> t_y(n - h);
      for (int t = h; t < n; ++t) {
        const int row = t - h;
        for (int lag = 1; lag <= h; ++lag) X(row, lag - 1) = y[static_cast<std::size_t>(t - lag)];
        X(row, h) = 1;
        t_y[row] = y[static_cast<std::size_t>(t)];
      }
      const Vector<Scalar> phi = detail::ridge_stabilized_solve(X, t_y);
      for (int t = h; t < n; ++t) {
        Scalar pred = phi[h];
        for (int lag = 1; lag <= h; ++lag)
          pred += phi[lag - 1] * y[static_cast<std::size_t>(t - lag)];
        eps[static_cast<std::size_t>(t)] = y[static_cast<std::size_t>(t)] - pred;
      }
    }

    // Stage 2: least squares on p value lags, q residual lags and a bias.
    const int t0 = std::max(p, q > 0 ? h + q : 0);
    const int rows = n - t0;
    if (rows < p + q + 2) throw std::runtime_error("fit_arima: series too short after lagging");
    Matrix<Scalar> X(rows, p + q + 1);
    Vector<Scalar> t_y(rows);
    for (int t = t0; t < n; ++t) {
      const int row = t - t0;
      for (int lag = 1; lag <= p; ++lag) X(row, lag - 1) = y[static_cast<std::size_t>(t - lag)];
      for (int lag = 1; lag <= q; ++lag) X(row, p + lag - 1) = eps[static_cast<std::size_t>(t - lag)];
      X(row, p + q) = 1;
      t_y[row] = y[static_cast<std::size_t>(t)];
    }
    const Vector<Scalar> w = detail::ridge_stabilized_solve(X, t_y);
    alpha = w.head(p);
    beta = w.segment(p, q);
    bias = w[p + q];
  }

  require(alpha.allFinite() && beta.allFinite() && std::isfinite(static_cast<double>(bias)),
          "fit_arima: non-finite coefficients");
  ArimaModel<Scalar> model(order, std::move(alpha), std::move(beta), bias);
  model.prime(values);
  return model;
}

template <typename Scalar>
ArimaModel<Scalar> fit_arima(const FiberSeries<Scalar>& series, int p, int d, int q) {
  return fit_arima(series.values, p, d, q);
}

/// AIC grid search over p in 1..5, d in {0,1}, q in {0,1}.  Conditional SSE
/// from one-step replay; ties break toward the smaller (p,d,q).
template <typename Scalar>
ArimaModel<Scalar> fit_arima_auto(const std::vector<Scalar>& values) {
  double best_aic = std::numeric_limits<double>::infinity();
  std::optional<ArimaModel<Scalar>> best;
  for (int p = 1; p <= 5; ++p)
    for (int d = 0; d <= 1; ++d)
      for (int q = 0; q <= 1; ++q) {
        if (static_cast<int>(values.size()) < p + d + q + 10) continue;
        ArimaModel<Scalar> model = fit_arima(values, p, d, q);
        const auto preds = one_step_predictions(model, values);
        if (preds.empty()) continue;
        double sse = 0;
        for (const auto& [t, pred] : preds) {
          const double r = static_cast<double>(values[static_cast<std::size_t>(t)] - pred);
          sse += r * r;
        }
        const double n_eff = static_cast<double>(preds.size());
        const double aic = n_eff * std::log(sse / n_eff + 1e-300) + 2.0 * (p + q + 1);
        if (aic < best_aic) {
          best_aic = aic;
          best = std::move(model);
        }
      }
  if (!best) throw std::runtime_error("fit_arima_auto: no admissible order");
  return *std::move(best);
}

/// Aggregate relative forecast error of one slice: sum over all cells of
/// |prediction - actual| / max(actual, delta).
template <typename Scalar>
Scalar slice_feedback_error(const Matrix<Scalar>& predictions, const Matrix<Scalar>& actuals,
                            Scalar delta) {
  require(delta > Scalar(0), "slice_feedback_error: delta must be positive");
  require(predictions.rows() == actuals.rows() && predictions.cols() == actuals.cols(),
          "slice_feedback_error: shape mismatch");
  Scalar total = 0;
  for (Index c = 0; c < actuals.cols(); ++c)
    for (Index r = 0; r < actuals.rows(); ++r)
      total += std::abs(predictions(r, c) - actuals(r, c)) / std::max(actuals(r, c), delta);
  return total;
}

using ArimaModeld = ArimaModel<double>;
using FiberSeriesd = FiberSeries<double>;

}  // namespace adasketch
