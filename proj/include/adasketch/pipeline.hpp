#pragma once

// End-to-end driver: train forecasters on the offline prefix, bucket fibers,
// sketch the online stream, decompose the sketch with the smoothness penalty,
// complete the tensor and score it against the full-tensor reference
// decomposition.  Also the theta calibration loop and the experiment grid
// (strategies x target drop rates x seeds at matched storage budgets).
//
// Report files never contain wall-clock data; timings go to a separate file
// so reruns with the same config and seeds are byte-identical.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adasketch/arima.hpp"
#include "adasketch/common.hpp"
#include "adasketch/io.hpp"
#include "adasketch/metrics.hpp"
#include "adasketch/projection.hpp"
#include "adasketch/regularizer.hpp"
#include "adasketch/sketcher.hpp"
#include "adasketch/skesmooth.hpp"
#include "adasketch/synthetic.hpp"
#include "adasketch/tensor.hpp"

namespace adasketch {

enum class Strategy { adaptive, fixed, random };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::adaptive: return "adaptive";
    case Strategy::fixed: return "fixed";
    default: return "random";
  }
}

inline Strategy strategy_from_string(const std::string& name) {
  if (name == "adaptive") return Strategy::adaptive;
  if (name == "fixed") return Strategy::fixed;
  if (name == "random") return Strategy::random;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

struct SamplerSettings {
  Strategy strategy = Strategy::adaptive;
  PidGains gains{};
  double theta = 1.0;
  double xi = 3.5;
  double delta = 1.0;
  Index fixed_interval = 2;
  double keep_fraction = 0.5;
  unsigned seed = 0;
};

struct ProjectionSettings {
  Index model_count = 0;  // 0: max(1, 1% of the fibers)
  ArimaOrder order{3, 0, 0};
  bool aic = false;
  unsigned seed = 0;
};

template <typename Scalar>
struct PipelineConfig {
  std::string input_tensor;  // empty: generate from the synthetic spec
  SyntheticSpec<Scalar> synthetic;
  double train_fraction = 0.6;
  SamplerSettings sampler;
  ProjectionSettings projection;
  FactorizationConfig<Scalar> factorization;
  std::string output_dir = "out";

  void validate() const {
    require(train_fraction > 0 && train_fraction < 1, "train fraction must be in (0,1)");
    require(!output_dir.empty(), "output directory must be set");
    if (input_tensor.empty()) synthetic.validate();
  }
};

struct RunRecord {
  unsigned seed = 0;
  std::string strategy;
  double target_drop = -1;  // -1: none requested
  double rho = 0;
  double achieved_drop = 0;
  double fms = 0;
  double tcs = 0;
  double runtime_seconds = 0;  // reported separately, never in report files
};

struct ExperimentReport {
  std::vector<RunRecord> runs;
};

struct CalibrationRow {
  double target = 0;
  double theta = 0;
  double achieved = 0;
  bool attained = false;
};

namespace detail {

template <typename Scalar>
std::vector<FiberSeries<Scalar>> prefix_fibers(const DenseTensor<Scalar>& tensor, Index t_end) {
  const Dims& d = tensor.dims();
  require(t_end >= 1 && t_end <= d.i, "prefix length out of range");
  std::vector<FiberSeries<Scalar>> fibers;
  fibers.reserve(static_cast<std::size_t>(d.j * d.k));
  for (Index k = 0; k < d.k; ++k)
    for (Index j = 0; j < d.j; ++j) {
      std::vector<Scalar> values(static_cast<std::size_t>(t_end));
      for (Index t = 0; t < t_end; ++t) values[static_cast<std::size_t>(t)] = tensor(t, j, k);
      fibers.push_back(FiberSeries<Scalar>::from_values(j, k, std::move(values)));
    }
  return fibers;
}

template <typename Scalar>
std::vector<Matrix<Scalar>> slice_range(const DenseTensor<Scalar>& tensor, Index t0, Index t1) {
  const Dims& d = tensor.dims();
  require(t0 >= 0 && t0 < t1 && t1 <= d.i, "slice range out of bounds");
  std::vector<Matrix<Scalar>> slices;
  slices.reserve(static_cast<std::size_t>(t1 - t0));
  for (Index t = t0; t < t1; ++t) {
    Matrix<Scalar> slice(d.j, d.k);
    for (Index k = 0; k < d.k; ++k)
      for (Index j = 0; j < d.j; ++j) slice(j, k) = tensor(t, j, k);
    slices.push_back(std::move(slice));
  }
  return slices;
}

/// Prefix slices (all observed) plus the online sketch shifted to global
/// time indices.
template <typename Scalar>
std::pair<SparseTensor<Scalar>, MaskTensor> assemble_sketch(const DenseTensor<Scalar>& tensor,
                                                            Index t_train,
                                                            const SketchResult<Scalar>& online) {
  const Dims& d = tensor.dims();
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  std::vector<Index> observed;
  for (Index t = 0; t < t_train; ++t) {
    observed.push_back(t);
    for (Index k = 0; k < d.k; ++k)
      for (Index j = 0; j < d.j; ++j)
        if (tensor(t, j, k) != Scalar(0)) entries.push_back({t, j, k, tensor(t, j, k)});
  }
  for (const auto& e : online.sketch.entries())
    entries.push_back({e.i + t_train, e.j, e.k, e.value});
  for (Index t : online.mask.observed_slices()) observed.push_back(t + t_train);
  return {SparseTensor<Scalar>(d, std::move(entries)), MaskTensor(d, std::move(observed))};
}

template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + name + ": " + e.what());
  }
}

inline void write_sample_log(const std::vector<SampleLogRow>& log, Index t_offset,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t,E_t,gamma,interval\n";
  for (const auto& row : log)
    out << (row.t + t_offset) << ',' << format_value(row.error) << ','
        << format_value(row.gamma) << ',' << row.interval << '\n';
}

}  // namespace detail

/// Trained per-run machinery shared by the pipeline, the calibrator and the
/// experiment grid.
template <typename Scalar>
struct TrainedStream {
  DenseTensor<Scalar> tensor;
  std::optional<KruskalModel<Scalar>> planted;
  Index t_train = 0;
  std::vector<FiberSeries<Scalar>> fibers;
  std::vector<ArimaModel<Scalar>> models;
  BucketAssignment assignment;
  AggregatedCoefficients<Scalar> aggregated;
  std::vector<Matrix<Scalar>> online_slices;

  ForecasterGrid<Scalar> fresh_forecasters() const {
    return make_fiber_forecasters(fibers, assignment, models, tensor.dims().j,
                                  tensor.dims().k);
  }
};

template <typename Scalar>
DenseTensor<Scalar> load_or_generate(const PipelineConfig<Scalar>& config,
                                     std::optional<KruskalModel<Scalar>>* planted = nullptr) {
  if (!config.input_tensor.empty()) return read_dense_tensor<Scalar>(config.input_tensor);
  auto [tensor, model] = generate(config.synthetic);
  if (planted) *planted = std::move(model);
  return std::move(tensor);
}

/// Loads the data, trains the bucketed forecaster models on the offline
/// prefix, and prepares the online slice stream.
template <typename Scalar>
TrainedStream<Scalar> prepare_stream(const PipelineConfig<Scalar>& config) {
  config.validate();
  std::optional<KruskalModel<Scalar>> planted;
  DenseTensor<Scalar> tensor =
      detail::run_stage("load", [&] { return load_or_generate(config, &planted); });
  const Index T = tensor.dims().i;
  const Index t_train = static_cast<Index>(static_cast<double>(T) * config.train_fraction);
  require(t_train >= 1 && t_train < T, "train fraction leaves an empty prefix or stream");

  return detail::run_stage("train-models", [&] {
    auto fibers = detail::prefix_fibers(tensor, t_train);
    const Index L = config.projection.model_count > 0
                        ? config.projection.model_count
                        : default_model_count(static_cast<Index>(fibers.size()));
    auto models = train_random_models(fibers, L, config.projection.seed,
                                      config.projection.order, config.projection.aic);
    auto assignment = assign_buckets(fibers, models);
    int p = config.projection.order.p;
    for (const auto& m : models) p = std::max(p, m.order().p);
    auto aggregated = aggregate_coefficients(assignment, models, p);
    auto slices = detail::slice_range(tensor, t_train, T);
    return TrainedStream<Scalar>{std::move(tensor),  std::move(planted), t_train,
                                 std::move(fibers),  std::move(models),  std::move(assignment),
                                 std::move(aggregated), std::move(slices)};
  });
}

/// One sketch of the online stream under the given settings.
template <typename Scalar>
SketchResult<Scalar> sketch_online(const TrainedStream<Scalar>& stream,
                                   const SamplerSettings& settings) {
  switch (settings.strategy) {
    case Strategy::adaptive: {
      ForecasterGrid<Scalar> forecasters = stream.fresh_forecasters();
      SamplerState state(settings.gains, settings.theta, settings.xi, settings.delta);
      return sketch_stream(stream.online_slices, forecasters, state);
    }
    case Strategy::fixed:
      return fixed_rate_sketch(stream.online_slices, settings.fixed_interval);
    default:
      return random_sketch(stream.online_slices, settings.keep_fraction, settings.seed);
  }
}

/// Reference decomposition of the complete tensor (full mask, rho = 0),
/// cached on disk so repeated runs against the same dataset reuse it.
template <typename Scalar>
KruskalModel<Scalar> reference_factors(const DenseTensor<Scalar>& tensor,
                                       const FactorizationConfig<Scalar>& config,
                                       const std::string& cache_path) {
  if (!cache_path.empty() && std::filesystem::exists(cache_path))
    return read_factors<Scalar>(cache_path);
  const Dims& d = tensor.dims();
  std::vector<typename SparseTensor<Scalar>::Entry> entries;
  for (Index k = 0; k < d.k; ++k)
    for (Index j = 0; j < d.j; ++j)
      for (Index i = 0; i < d.i; ++i)
        if (tensor(i, j, k) != Scalar(0)) entries.push_back({i, j, k, tensor(i, j, k)});
  SparseTensor<Scalar> full(d, std::move(entries));
  FactorizationConfig<Scalar> ref_config = config;
  ref_config.rho = 0;
  RegularizerMatrix<Scalar> none(d.i, Vector<Scalar>());
  auto result = factorize(full, MaskTensor::full(d), ref_config, none);
  if (!cache_path.empty()) write_factors(result.model, cache_path);
  return result.model;
}

/// Full pipeline for one configuration.  Persists every intermediate artifact
/// under the output directory and returns the scored run record.
template <typename Scalar>
RunRecord run_pipeline(const PipelineConfig<Scalar>& config) {
  const auto started = std::chrono::steady_clock::now();
  std::filesystem::create_directories(config.output_dir);
  const std::string dir = config.output_dir + "/";

  TrainedStream<Scalar> stream = prepare_stream(config);
  write_tensor(stream.tensor, dir + "full.tns");
  if (stream.planted) write_factors(*stream.planted, dir + "planted_factors.txt");
  write_models(stream.models, stream.aggregated, dir + "models.json");
  write_buckets(stream.assignment, dir + "buckets.txt");

  SketchResult<Scalar> online = detail::run_stage(
      "sketch", [&] { return sketch_online(stream, config.sampler); });
  auto [sketch, mask] = detail::assemble_sketch(stream.tensor, stream.t_train, online);
  write_tensor(sketch, dir + "sketch.tns");
  write_mask(mask, dir + "mask.txt");
  detail::write_sample_log(online.sample_log, stream.t_train, dir + "samples.csv");

  KruskalModel<Scalar> reference = detail::run_stage("reference", [&] {
    return reference_factors(stream.tensor, config.factorization, dir + "factors_ref.txt");
  });

  FactorizationResult<Scalar> est = detail::run_stage("decompose", [&] {
    RegularizerMatrix<Scalar> reg = build_regularizer(stream.aggregated, stream.tensor.dims().i);
    return factorize(sketch, mask, config.factorization, reg);
  });
  write_factors(est.model, dir + "factors_est.txt");

  DenseTensor<Scalar> completed = detail::run_stage(
      "complete", [&] { return complete_tensor(sketch, mask, est.model); });
  write_tensor(completed, dir + "completed.tns");

  RunRecord record = detail::run_stage("metrics", [&] {
    RunRecord r;
    r.strategy = to_string(config.sampler.strategy);
    r.rho = static_cast<double>(config.factorization.rho);
    r.achieved_drop = online.drop_rate();
    r.fms = fms(reference, est.model).fms;
    r.tcs = tcs(stream.tensor, completed, mask);
    return r;
  });
  record.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  nlohmann::json report;
  report["strategy"] = record.strategy;
  report["rho"] = record.rho;
  report["achieved_drop"] = format_value(record.achieved_drop);
  report["fms"] = format_value(record.fms);
  report["tcs"] = format_value(record.tcs);
  std::ofstream out(dir + "run_report.json");
  out << report.dump(2) << '\n';
  return record;
}

/// Measures the adaptive drop rate as a function of theta by replaying the
/// tail of the training prefix (models trained on the head), then bisects
/// toward each target.  Targets that no theta can reach within two percentage
/// points are reported as unattained.
template <typename Scalar>
std::vector<CalibrationRow> calibrate_theta(const PipelineConfig<Scalar>& config,
                                            const std::vector<double>& targets) {
  config.validate();
  for (double t : targets) require(t >= 0 && t < 1, "calibration targets must be in [0,1)");

  std::optional<KruskalModel<Scalar>> planted;
  DenseTensor<Scalar> tensor = load_or_generate(config, &planted);
  const Index T = tensor.dims().i;
  const Index t_train = static_cast<Index>(static_cast<double>(T) * config.train_fraction);
  const Index t_head = static_cast<Index>(static_cast<double>(t_train) * config.train_fraction);
  require(t_head >= 1 && t_head < t_train, "prefix too short to calibrate");

  auto head_fibers = detail::prefix_fibers(tensor, t_head);
  const Index L = config.projection.model_count > 0
                      ? config.projection.model_count
                      : default_model_count(static_cast<Index>(head_fibers.size()));
  auto models = train_random_models(head_fibers, L, config.projection.seed,
                                    config.projection.order, config.projection.aic);
  auto assignment = assign_buckets(head_fibers, models);
  auto replay = detail::slice_range(tensor, t_head, t_train);

  auto measure = [&](double theta) {
    ForecasterGrid<Scalar> forecasters = make_fiber_forecasters(
        head_fibers, assignment, models, tensor.dims().j, tensor.dims().k);
    SamplerState state(config.sampler.gains, theta, config.sampler.xi, config.sampler.delta);
    return sketch_stream(replay, forecasters, state).drop_rate();
  };

  std::vector<CalibrationRow> rows;
  for (double target : targets) {
    CalibrationRow row;
    row.target = target;
    double best_theta = 1.0;
    double best_rate = measure(1.0);
    auto consider = [&](double theta, double rate) {
      if (std::abs(rate - target) < std::abs(best_rate - target)) {
        best_theta = theta;
        best_rate = rate;
      }
    };
    if (best_rate < target) {
      double lo = 1.0, hi = 2.0, hi_rate = measure(hi);
      consider(hi, hi_rate);
      while (hi_rate < target && hi < 1e6) {
        lo = hi;
        hi *= 2;
        hi_rate = measure(hi);
        consider(hi, hi_rate);
      }
      for (int iter = 0; iter < 40 && hi - lo > 1e-3 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double rate = measure(mid);
        consider(mid, rate);
        if (rate < target)
          lo = mid;
        else
          hi = mid;
      }
    }
    row.theta = best_theta;
    row.achieved = best_rate;
    row.attained = std::abs(best_rate - target) <= 0.02;
    rows.push_back(row);
  }
  return rows;
}

struct ExperimentConfig {
  std::vector<double> target_drop_rates{0.5, 0.8};
  std::vector<unsigned> seeds{1, 2, 3, 4, 5};
  bool include_unregularized = false;  // add rho = 0 rows for each sketch
};

namespace detail {

template <typename Scalar>
RunRecord score_sketch(const TrainedStream<Scalar>& stream, const SketchResult<Scalar>& online,
                       const KruskalModel<Scalar>& reference,
                       const FactorizationConfig<Scalar>& fac) {
  const auto started = std::chrono::steady_clock::now();
  auto [sketch, mask] = assemble_sketch(stream.tensor, stream.t_train, online);
  RegularizerMatrix<Scalar> reg = build_regularizer(stream.aggregated, stream.tensor.dims().i);
  auto est = factorize(sketch, mask, fac, reg);
  auto completed = complete_tensor(sketch, mask, est.model);
  RunRecord record;
  record.rho = static_cast<double>(fac.rho);
  record.achieved_drop = online.drop_rate();
  record.fms = fms(reference, est.model).fms;
  record.tcs = tcs(stream.tensor, completed, mask);
  record.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

}  // namespace detail

/// Experiment grid at matched storage budgets: per seed and target drop rate,
/// the adaptive sampler runs at a theta calibrated on the training prefix,
/// and the fixed/random baselines are configured to the adaptive run's
/// achieved keep rate.  Every run is scored against the per-seed full-tensor
/// reference decomposition.
template <typename Scalar>
ExperimentReport run_experiment(const PipelineConfig<Scalar>& base,
                                const ExperimentConfig& experiment) {
  base.validate();
  require(base.input_tensor.empty(), "the experiment grid runs on synthetic streams");
  ExperimentReport report;

  for (unsigned seed : experiment.seeds) {
    PipelineConfig<Scalar> config = base;
    config.synthetic.seed = base.synthetic.seed + 101 * seed;
    config.factorization.seed = base.factorization.seed + 7 * seed;
    config.sampler.seed = base.sampler.seed + 13 * seed;

    const auto calibration = calibrate_theta(config, experiment.target_drop_rates);
    TrainedStream<Scalar> stream = prepare_stream(config);

    const std::string cache = config.output_dir.empty()
                                  ? std::string()
                                  : config.output_dir + "/factors_ref_seed" +
                                        std::to_string(seed) + ".txt";
    if (!config.output_dir.empty()) std::filesystem::create_directories(config.output_dir);
    KruskalModel<Scalar> reference =
        reference_factors(stream.tensor, config.factorization, cache);

    for (std::size_t n = 0; n < experiment.target_drop_rates.size(); ++n) {
      const double target = experiment.target_drop_rates[n];

      SamplerSettings adaptive = config.sampler;
      adaptive.strategy = Strategy::adaptive;
      adaptive.theta = calibration[n].theta;
      SketchResult<Scalar> adaptive_sketch = sketch_online(stream, adaptive);
      const double keep = 1.0 - adaptive_sketch.drop_rate();

      SamplerSettings fixed = config.sampler;
      fixed.strategy = Strategy::fixed;
      fixed.fixed_interval = std::max<Index>(1, static_cast<Index>(std::llround(1.0 / keep)));
      SamplerSettings random = config.sampler;
      random.strategy = Strategy::random;
      random.keep_fraction = keep;

      struct Candidate {
        Strategy strategy;
        SketchResult<Scalar> sketch;
      };
      std::vector<Candidate> candidates;
      candidates.push_back({Strategy::adaptive, std::move(adaptive_sketch)});
      candidates.push_back({Strategy::fixed, sketch_online(stream, fixed)});
      candidates.push_back({Strategy::random, sketch_online(stream, random)});

      for (const auto& candidate : candidates) {
        std::vector<Scalar> rho_values{config.factorization.rho};
        if (experiment.include_unregularized && config.factorization.rho != 0)
          rho_values.push_back(0);
        for (Scalar rho : rho_values) {
          FactorizationConfig<Scalar> fac = config.factorization;
          fac.rho = rho;
          RunRecord record = detail::score_sketch(stream, candidate.sketch, reference, fac);
          record.seed = seed;
          record.strategy = to_string(candidate.strategy);
          record.target_drop = target;
          report.runs.push_back(record);
        }
      }
    }
  }
  return report;
}

inline void write_report_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "seed,strategy,target_drop,rho,achieved_drop,fms,tcs\n";
  for (const auto& run : report.runs)
    out << run.seed << ',' << run.strategy << ',' << format_value(run.target_drop) << ','
        << format_value(run.rho) << ',' << format_value(run.achieved_drop) << ','
        << format_value(run.fms) << ',' << format_value(run.tcs) << '\n';
}

inline void write_report_json(const ExperimentReport& report, const std::string& path) {
  nlohmann::json doc;
  doc["runs"] = nlohmann::json::array();
  for (const auto& run : report.runs) {
    nlohmann::json rec;
    rec["seed"] = run.seed;
    rec["strategy"] = run.strategy;
    rec["target_drop"] = format_value(run.target_drop);
    rec["rho"] = format_value(run.rho);
    rec["achieved_drop"] = format_value(run.achieved_drop);
    rec["fms"] = format_value(run.fms);
    rec["tcs"] = format_value(run.tcs);
    doc["runs"].push_back(std::move(rec));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
}

inline void write_timings(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "seed,strategy,target_drop,rho,runtime_seconds\n";
  for (const auto& run : report.runs)
    out << run.seed << ',' << run.strategy << ',' << format_value(run.target_drop) << ','
        << format_value(run.rho) << ',' << format_value(run.runtime_seconds) << '\n';
}

// --- flat key=value config files --------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) out.push_back(std::stod(trim(item)));
  return out;
}

template <typename Scalar>
Vector<Scalar> parse_vector(const std::string& text) {
  const auto values = parse_number_list(text);
  Vector<Scalar> out(static_cast<Index>(values.size()));
  for (std::size_t n = 0; n < values.size(); ++n) out[static_cast<Index>(n)] = Scalar(values[n]);
  return out;
}

}  // namespace detail

/// Flat key=value configuration covering the whole pipeline plus the
/// experiment grid.  Lines starting with # are comments; unknown keys are an
/// error.
template <typename Scalar>
std::pair<PipelineConfig<Scalar>, ExperimentConfig> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  PipelineConfig<Scalar> config;
  ExperimentConfig experiment;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));

    if (key == "input") {
      config.input_tensor = value;
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else if (key == "train_fraction") {
      config.train_fraction = std::stod(value);
    } else if (key == "dims") {
      const auto v = detail::parse_number_list(value);
      require(v.size() == 3, "dims needs three values");
      config.synthetic.dims = Dims{static_cast<Index>(v[0]), static_cast<Index>(v[1]),
                                   static_cast<Index>(v[2])};
    } else if (key == "synthetic_rank") {
      config.synthetic.rank = static_cast<Index>(std::stoll(value));
    } else if (key == "ar") {
      config.synthetic.ar = {detail::parse_vector<Scalar>(value)};
    } else if (key == "innovation_sigma") {
      config.synthetic.innovation_sigma = Scalar(std::stod(value));
    } else if (key == "spatial_bumps") {
      config.synthetic.spatial_bumps = static_cast<Index>(std::stoll(value));
    } else if (key == "temporal_base") {
      config.synthetic.temporal_base = Scalar(std::stod(value));
    } else if (key == "noise_sigma") {
      config.synthetic.noise_sigma = Scalar(std::stod(value));
    } else if (key == "noise_rel") {
      config.synthetic.noise_rel = Scalar(std::stod(value));
    } else if (key == "bursts") {
      config.synthetic.bursts.clear();
      std::stringstream stream(value);
      std::string item;
      while (std::getline(stream, item, ';')) {
        std::stringstream burst(detail::trim(item));
        std::string t, mag, dur;
        if (!std::getline(burst, t, ':') || !std::getline(burst, mag, ':') ||
            !std::getline(burst, dur, ':'))
          throw std::invalid_argument("bursts entries look like t:magnitude:duration");
        config.synthetic.bursts.push_back({static_cast<Index>(std::stoll(detail::trim(t))),
                                           Scalar(std::stod(detail::trim(mag))),
                                           static_cast<Index>(std::stoll(detail::trim(dur)))});
      }
    } else if (key == "nonneg") {
      config.synthetic.nonneg = std::stoi(value) != 0;
    } else if (key == "data_seed") {
      config.synthetic.seed = static_cast<unsigned>(std::stoul(value));
    } else if (key == "strategy") {
      config.sampler.strategy = strategy_from_string(value);
    } else if (key == "pid") {
      const auto v = detail::parse_number_list(value);
      require(v.size() == 3, "pid needs three gains");
      config.sampler.gains = PidGains(v[0], v[1], v[2]);
    } else if (key == "theta") {
      config.sampler.theta = std::stod(value);
    } else if (key == "xi") {
      config.sampler.xi = std::stod(value);
    } else if (key == "delta") {
      config.sampler.delta = std::stod(value);
    } else if (key == "fixed_interval") {
      config.sampler.fixed_interval = static_cast<Index>(std::stoll(value));
    } else if (key == "keep_fraction") {
      config.sampler.keep_fraction = std::stod(value);
    } else if (key == "sampler_seed") {
      config.sampler.seed = static_cast<unsigned>(std::stoul(value));
    } else if (key == "model_count") {
      config.projection.model_count = static_cast<Index>(std::stoll(value));
    } else if (key == "arima_order") {
      const auto v = detail::parse_number_list(value);
      require(v.size() == 3, "arima_order needs p,d,q");
      config.projection.order = ArimaOrder{static_cast<int>(v[0]), static_cast<int>(v[1]),
                                           static_cast<int>(v[2])};
    } else if (key == "aic") {
      config.projection.aic = std::stoi(value) != 0;
    } else if (key == "projection_seed") {
      config.projection.seed = static_cast<unsigned>(std::stoul(value));
    } else if (key == "rank") {
      config.factorization.rank = static_cast<Index>(std::stoll(value));
    } else if (key == "rho") {
      config.factorization.rho = Scalar(std::stod(value));
    } else if (key == "max_iterations") {
      config.factorization.max_iterations = std::stoi(value);
    } else if (key == "gradient_tolerance") {
      config.factorization.gradient_tolerance = Scalar(std::stod(value));
    } else if (key == "lbfgs_memory") {
      config.factorization.lbfgs_memory = std::stoi(value);
    } else if (key == "factorization_seed") {
      config.factorization.seed = static_cast<unsigned>(std::stoul(value));
    } else if (key == "targets") {
      experiment.target_drop_rates = detail::parse_number_list(value);
    } else if (key == "seeds") {
      experiment.seeds.clear();
      for (double v : detail::parse_number_list(value))
        experiment.seeds.push_back(static_cast<unsigned>(v));
    } else if (key == "include_unregularized") {
      experiment.include_unregularized = std::stoi(value) != 0;
    } else {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
    }
  }
  return {std::move(config), std::move(experiment)};
}

}  // namespace adasketch
