#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slimnet/experiment/config.hpp"
#include "slimnet/model/checkpoint.hpp"
#include "slimnet/prune/prune.hpp"

namespace slimnet {

struct CurvePoint {
  std::size_t epoch = 0;
  double train_objective = 0.0;  // mean over the epoch's batches, train mode
  double train_loss = 0.0;       // same, data term only
  double test_metric = 0.0;      // eval mode

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct FitPoint {
  double x = 0.0;
  double y_true = 0.0;
  double y_pred = 0.0;

  friend bool operator==(const FitPoint&, const FitPoint&) = default;
};

struct RunReport {
  std::string label;    // GL, iGL, ...
  std::string dataset;
  std::string metric;   // "loss" (regression MSE) or "accuracy"
  std::uint64_t seed = 0;
  std::size_t repeat = 0;
  std::string zero_ratio;  // exact rational, "0" for full kinds

  double train_metric = 0.0;
  double test_metric = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double reg_value = 0.0;  // R(theta) of the final parameters, without lambda
  double objective = 0.0;  // train_loss + lambda * reg_value

  std::vector<std::size_t> active_neurons;
  std::vector<double> sparsity;
  std::size_t regularized_params = 0;
  std::vector<std::size_t> pruned_widths;  // empty unless pruning ran
  std::optional<double> pruned_test_metric;

  double wall_time_s = 0.0;  // training loop only
  std::size_t steps = 0;     // optimizer steps taken
  std::optional<std::size_t> steps_to_target;
  std::optional<double> initial_train_metric;  // continued runs
  std::optional<double> initial_test_metric;

  std::vector<CurvePoint> curves;
  std::vector<FitPoint> fit;  // single-feature regression on the training set
  nlohmann::json config;      // fully resolved ExperimentConfig

  // Equality of everything except wall time.
  bool same_results(const RunReport& other) const;
  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct TrainedRun {
  RunReport report;
  NetworkParams params;
  AdamState optimizer;
  NeuronMaskSet masks;
};

struct PreparedData {
  Dataset train;
  Dataset test;
  std::optional<FeatureStats> target_stats;  // regression targets when normalized
};

// Loads and splits the configured dataset, normalizing with training-split
// statistics. Throws DataError for unreadable files and ConfigError when the
// data does not match the configured widths.
PreparedData prepare_data(const ExperimentConfig& cfg);

// Trains with Adam over the regularized objective and evaluates. Throws
// NumericalError when the objective diverges.
TrainedRun train_run(const ExperimentConfig& cfg);
RunReport run_experiment(const ExperimentConfig& cfg);

struct SweepSummary {
  std::string zero_ratio;
  std::size_t runs = 0;
  double median_test_metric = 0.0;
  double mean_test_metric = 0.0;
  double median_train_metric = 0.0;
  double mean_train_metric = 0.0;
  double mean_wall_time_s = 0.0;
  std::size_t regularized_params = 0;
};

struct SweepResult {
  std::vector<RunReport> runs;  // ratio-major, then repeat
  std::vector<SweepSummary> summary;
};

// Seed of repeat r for base seed s.
std::uint64_t repeat_seed(std::uint64_t base, std::size_t repeat);

// One run per (ratio, repeat) with the partial counterpart of cfg's kind
// (gl -> pgl, sgl -> psgl). Repeat r uses repeat_seed(cfg.seed, r).
SweepResult sweep_beta(const ExperimentConfig& cfg, const std::vector<Rational>& ratios, std::size_t repeats);

// Mean/median per ratio over the runs; groups by zero_ratio in input order.
std::vector<SweepSummary> summarize(const std::vector<RunReport>& runs);

struct ContinueOptions {
  std::size_t epochs = 0;
  std::optional<double> target_metric;  // default: the checkpoint's train metric
  bool compare_random_init = false;
  std::uint64_t random_init_seed = 0;
};

struct ContinueResult {
  TrainedRun resumed;
  std::optional<RunReport> random_init;  // same widths, fresh weights, same budget
};

// Resumes training from `ckpt` with a fresh optimizer. cfg describes the data
// and training; its widths are replaced by the checkpoint's. Throws
// ShapeError when the network does not fit the data.
ContinueResult continue_training(const Checkpoint& ckpt, const ExperimentConfig& cfg,
                                 const ContinueOptions& opts);

// Checkpoint metadata: {"config": ..., "report": ...}.
std::string checkpoint_metadata(const RunReport& report);
ExperimentConfig config_from_checkpoint(const Checkpoint& ckpt);

}  // namespace slimnet
