#pragma once

// Streaming slice sampler.  The adaptive engine walks the online stream one
// slice at a time: at each sampling point it stores the slice, scores the
// per-fiber forecasts against the observed values (slice feedback error),
// feeds that through a PID controller and stretches or shrinks the gap to the
// next sampling point.  Between sampling points the forecasters free-run on
// their own predictions.  Fixed-rate and Bernoulli baselines share the same
// result type so downstream stages treat all three alike.

#include <cmath>
#include <iostream>
#include <random>
#include <utility>
#include <vector>

#include "adasketch/arima.hpp"
#include "adasketch/common.hpp"
#include "adasketch/projection.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

struct PidGains {
  double gamma_p = 0.7;
  double gamma_i = 0.2;
  double gamma_d = 0.1;

  PidGains() = default;

  PidGains(double p, double i, double d) : gamma_p(p), gamma_i(i), gamma_d(d) {
    require(gamma_p >= 0 && gamma_i >= 0 && gamma_d >= 0, "PID gains must be nonnegative");
    require(std::abs(gamma_p + gamma_i + gamma_d - 1.0) <= 1e-12, "PID gains must sum to 1");
    if (!(gamma_p > gamma_i && gamma_i > gamma_d))
      std::cerr << "warning: PID gains do not follow proportional > integral > derivative\n";
  }
};

/// Controller state threaded through a stream run.
class SamplerState {
 public:
  SamplerState(PidGains gains, double theta, double xi, double delta = 1.0)
      : gains_(gains), theta_(theta), xi_(xi), delta_(delta) {
    require(theta_ > 0, "theta must be positive");
    require(xi_ > 0, "xi must be positive");
    require(delta_ > 0, "delta must be positive");
  }

  const PidGains& gains() const { return gains_; }
  double theta() const { return theta_; }
  double xi() const { return xi_; }
  double delta() const { return delta_; }
  Index next_sample() const { return ns_; }
  void set_next_sample(Index ns) { ns_ = ns; }

  Index error_count() const { return static_cast<Index>(errors_.size()); }
  const std::vector<std::pair<Index, double>>& error_history() const { return errors_; }

  void record_error(double error, Index t) {
    if (!errors_.empty() && t <= errors_.back().first)
      throw std::invalid_argument("sampler error history must advance in time");
    errors_.emplace_back(t, error);
    error_sum_ += error;
  }

  double error_sum() const { return error_sum_; }

 private:
  PidGains gains_;
  double theta_;
  double xi_;
  double delta_;
  Index ns_ = 0;
  std::vector<std::pair<Index, double>> errors_;
  double error_sum_ = 0;
};

/// Combined PID error for the current slice feedback error.  The integral
/// term averages every error recorded so far including the current one; the
/// derivative uses the spacing between the current and previous sample times
/// and is zero for the first sample.  The caller records the error afterward.
inline double pid_error(const SamplerState& state, double current_error, Index t) {
  const auto& history = state.error_history();
  if (!history.empty() && t <= history.back().first)
    throw std::invalid_argument("pid_error: t must be beyond the last recorded error");
  const PidGains& g = state.gains();
  const double count = static_cast<double>(state.error_count() + 1);
  const double integral = (state.error_sum() + current_error) / count;
  double derivative = 0;
  if (!history.empty()) {
    const auto& [prev_t, prev_e] = history.back();
    derivative = (current_error - prev_e) / static_cast<double>(t - prev_t);
  }
  return g.gamma_p * current_error + g.gamma_i * integral + g.gamma_d * derivative;
}

/// Interval update: round(max{1, theta * (1 - e^{(Gamma - xi)/xi})}).
/// Monotone non-increasing in Gamma and bounded by [1, round(theta)].
inline Index new_interval(const SamplerState& state, double gamma) {
  const double raw = state.theta() * (1.0 - std::exp((gamma - state.xi()) / state.xi()));
  return static_cast<Index>(std::llround(std::max(1.0, raw)));
}

struct SampleLogRow {
  Index t;
  double error;
  double gamma;
  Index interval;
};

template <typename Scalar>
struct SketchResult {
  SparseTensor<Scalar> sketch;
  MaskTensor mask;
  std::vector<SampleLogRow> sample_log;

  Index stream_length() const { return mask.dims().i; }
  Index sampled_slices() const { return static_cast<Index>(mask.observed_slices().size()); }
  double drop_rate() const {
    return 1.0 - static_cast<double>(sampled_slices()) / static_cast<double>(stream_length());
  }
};

/// One forecaster per fiber, laid out j + J*k.  Coefficients come from the
/// fiber's bucket model; state is the fiber's own history.
template <typename Scalar>
class ForecasterGrid {
 public:
  ForecasterGrid(Index j_dim, Index k_dim, std::vector<ArimaModel<Scalar>> models)
      : j_dim_(j_dim), k_dim_(k_dim), models_(std::move(models)) {
    require(static_cast<Index>(models_.size()) == j_dim_ * k_dim_,
            "forecaster grid needs one model per fiber");
  }

  Index j_dim() const { return j_dim_; }
  Index k_dim() const { return k_dim_; }

  ArimaModel<Scalar>& at(Index j, Index k) { return models_[static_cast<std::size_t>(j + j_dim_ * k)]; }
  const ArimaModel<Scalar>& at(Index j, Index k) const {
    return models_[static_cast<std::size_t>(j + j_dim_ * k)];
  }

  Matrix<Scalar> forecast_slice() const {
    Matrix<Scalar> out(j_dim_, k_dim_);
    for (Index k = 0; k < k_dim_; ++k)
      for (Index j = 0; j < j_dim_; ++j) out(j, k) = at(j, k).forecast_one();
    return out;
  }

  void observe_slice(const Matrix<Scalar>& actual) {
    for (Index k = 0; k < k_dim_; ++k)
      for (Index j = 0; j < j_dim_; ++j) at(j, k).observe(actual(j, k));
  }

  void free_run() {
    for (auto& model : models_) model.observe_forecast();
  }

 private:
  Index j_dim_;
  Index k_dim_;
  std::vector<ArimaModel<Scalar>> models_;
};

/// Builds per-fiber forecasters from the bucket assignment: each fiber clones
/// its bucket's coefficients and is primed with its own training history.
/// Zero-bucket fibers get a constant-zero predictor.
template <typename Scalar>
ForecasterGrid<Scalar> make_fiber_forecasters(const std::vector<FiberSeries<Scalar>>& fibers,
                                              const BucketAssignment& assignment,
                                              const std::vector<ArimaModel<Scalar>>& models,
                                              Index j_dim, Index k_dim) {
  require(assignment.fiber_count() == static_cast<Index>(fibers.size()),
          "make_fiber_forecasters: assignment does not cover the fibers");
  require(static_cast<Index>(fibers.size()) == j_dim * k_dim,
          "make_fiber_forecasters: need one fiber per grid cell");
  std::vector<ArimaModel<Scalar>> grid(static_cast<std::size_t>(j_dim * k_dim),
                                       ArimaModel<Scalar>::bias_only(0));
  for (std::size_t n = 0; n < fibers.size(); ++n) {
    const FiberSeries<Scalar>& fiber = fibers[n];
    const int bucket = assignment.bucket[n];
    ArimaModel<Scalar> forecaster =
        bucket == assignment.model_count
            ? ArimaModel<Scalar>::bias_only(0)
            : models[static_cast<std::size_t>(bucket)].coefficients_only();
    forecaster.prime(fiber.values);
    grid[static_cast<std::size_t>(fiber.j + j_dim * fiber.k)] = std::move(forecaster);
  }
  return ForecasterGrid<Scalar>(j_dim, k_dim, std::move(grid));
}

namespace detail {

template <typename Scalar>
Dims stream_dims(const std::vector<Matrix<Scalar>>& slices) {
  require(!slices.empty(), "sketch: stream must be nonempty");
  const Index j = slices.front().rows();
  const Index k = slices.front().cols();
  for (const auto& slice : slices)
    require(slice.rows() == j && slice.cols() == k, "sketch: slice shape mismatch");
  return Dims{static_cast<Index>(slices.size()), j, k};
}

template <typename Scalar>
void append_slice_entries(std::vector<typename SparseTensor<Scalar>::Entry>& entries, Index t,
                          const Matrix<Scalar>& slice) {
  for (Index k = 0; k < slice.cols(); ++k)
    for (Index j = 0; j < slice.rows(); ++j)
      if (slice(j, k) != Scalar(0)) entries.push_back({t, j, k, slice(j, k)});
}

}  // namespace detail

/// Adaptive sampling over an online stream (t indexed from 0).  At t == ns the
/// slice is stored, the feedback error and PID error are computed, and ns
/// advances by the new interval; other slices are skipped while the
/// forecasters free-run.
template <typename Scalar>
SketchResult<Scalar> sketch_stream(const std::vector<Matrix<Scalar>>& slices,
                                   ForecasterGrid<Scalar>& forecasters, SamplerState state) {
  const Dims dims = detail::stream_dims(slices);
  require(forecasters.j_dim() == dims.j && forecasters.k_dim() == dims.k,
          "sketch_stream: forecaster grid does not match slice shape");
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  std::vector<Index> observed;
  std::vector<SampleLogRow> log;
  for (Index t = 0; t < dims.i; ++t) {
    const Matrix<Scalar>& actual = slices[static_cast<std::size_t>(t)];
    if (t == state.next_sample()) {
      const Matrix<Scalar> predicted = forecasters.forecast_slice();
      const double error =
          static_cast<double>(slice_feedback_error(predicted, actual, Scalar(state.delta())));
      const double gamma = pid_error(state, error, t);
      const Index interval = new_interval(state, gamma);
      state.record_error(error, t);
      state.set_next_sample(t + interval);
      detail::append_slice_entries<Scalar>(entries, t, actual);
      observed.push_back(t);
      log.push_back({t, error, gamma, interval});
      forecasters.observe_slice(actual);
    } else {
      forecasters.free_run();
    }
  }
  return SketchResult<Scalar>{SparseTensor<Scalar>(dims, std::move(entries)),
                              MaskTensor(dims, std::move(observed)), std::move(log)};
}

/// Baseline: keep slices 0, interval, 2*interval, ...
template <typename Scalar>
SketchResult<Scalar> fixed_rate_sketch(const std::vector<Matrix<Scalar>>& slices, Index interval) {
  require(interval >= 1, "fixed_rate_sketch: interval must be >= 1");
  const Dims dims = detail::stream_dims(slices);
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  std::vector<Index> observed;
  std::vector<SampleLogRow> log;
  for (Index t = 0; t < dims.i; t += interval) {
    detail::append_slice_entries<Scalar>(entries, t, slices[static_cast<std::size_t>(t)]);
    observed.push_back(t);
    log.push_back({t, 0.0, 0.0, interval});
  }
  return SketchResult<Scalar>{SparseTensor<Scalar>(dims, std::move(entries)),
                              MaskTensor(dims, std::move(observed)), std::move(log)};
}

/// Baseline: keep each slice independently with probability keep_fraction.
template <typename Scalar>
SketchResult<Scalar> random_sketch(const std::vector<Matrix<Scalar>>& slices,
                                   double keep_fraction, unsigned seed) {
  require(keep_fraction > 0 && keep_fraction <= 1,
          "random_sketch: keep_fraction must be in (0, 1]");
  const Dims dims = detail::stream_dims(slices);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(keep_fraction);
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  std::vector<Index> observed;
  std::vector<SampleLogRow> log;
  for (Index t = 0; t < dims.i; ++t) {
    if (!keep(rng)) continue;
    detail::append_slice_entries<Scalar>(entries, t, slices[static_cast<std::size_t>(t)]);
    observed.push_back(t);
    log.push_back({t, 0.0, 0.0, 0});
  }
  return SketchResult<Scalar>{SparseTensor<Scalar>(dims, std::move(entries)),
                              MaskTensor(dims, std::move(observed)), std::move(log)};
}

using SketchResultd = SketchResult<double>;
using ForecasterGridd = ForecasterGrid<double>;

}  // namespace adasketch
