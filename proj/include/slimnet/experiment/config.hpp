#pragma once

// Experiment configuration: presets, JSON (de)serialization and validation.
//
// Config files are JSON objects with the keys written by config_to_json.
// Unknown keys are rejected. zero_ratio is an exact rational string such as
// "1/8". Seeds left at null are derived from the run seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slimnet/backprop/objective.hpp"
#include "slimnet/data/dataset.hpp"
#include "slimnet/optim/adam.hpp"
#include "slimnet/reg/rational.hpp"
#include "slimnet/reg/regularizer.hpp"

namespace slimnet {

enum class DataSource { toy, table, idx };

std::string to_string(DataSource s);
DataSource data_source_from_string(const std::string& s);

struct DataConfig {
  std::string id;  // dataset name carried into reports
  DataSource source = DataSource::toy;
  std::size_t toy_points = 40;
  // table: one file split into train/test. idx: separate train and test pairs.
  std::filesystem::path path;
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  int target_column = -1;
  char delimiter = ',';
  bool header = false;
  TaskKind task = TaskKind::regression;
  bool normalize_features = false;  // z-score with training-split statistics
  bool normalize_targets = false;   // regression only
  std::size_t max_train = 0;        // keep the first n rows; 0 keeps all
  std::size_t max_test = 0;
  double train_fraction = 0.8;
  bool stratified = false;
  std::optional<std::uint64_t> split_seed;
};

struct ExperimentConfig {
  std::string preset;  // informational; empty for hand-written configs
  DataConfig data;
  std::vector<std::size_t> widths;
  Activation hidden_activation = Activation::relu;
  bool batch_norm = true;
  // Recompute running statistics over the training split after the last
  // epoch, so eval mode matches the final weights.
  bool recalibrate_bn = true;
  LossKind loss = LossKind::mean_squared_error;
  std::optional<double> init_std;

  RegularizerSpec reg;
  Rational zero_ratio;  // ignored by the non-partial kinds
  MaskPlacement mask_placement = MaskPlacement::prefix;
  std::optional<std::uint64_t> mask_seed;

  AdamHyper adam;
  std::size_t epochs = 1;
  std::size_t batch_size = 0;  // 0: full batch
  std::size_t eval_every = 1;  // epochs between curve points

  double sparsity_threshold = 1e-3;
  double prune_threshold = 1e-3;
  bool prune = false;

  std::uint64_t seed = 0;
  std::size_t repeats = 1;
};

inline const std::vector<std::string> kPresetNames = {"toy", "boston", "sdd", "mnist", "fashion"};

// Table-row defaults for the named preset with data paths under `data_dir`.
// Throws ConfigError for an unknown name.
ExperimentConfig preset_config(const std::string& name, const std::filesystem::path& data_dir);

// Throws ConfigError describing the first inconsistency.
void validate(const ExperimentConfig& cfg);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Missing keys keep the values of `base`. Throws ConfigError on unknown keys
// or ill-typed values.
ExperimentConfig config_from_json(const nlohmann::json& j, const ExperimentConfig& base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, const std::filesystem::path& data_dir);

// Derived seeds; each purpose gets its own stream of the run seed.
std::uint64_t split_seed(const ExperimentConfig& cfg);
std::uint64_t init_seed(const ExperimentConfig& cfg);
std::uint64_t batch_seed(const ExperimentConfig& cfg, std::size_t epoch);
std::uint64_t mask_seed(const ExperimentConfig& cfg);

// Short row label: GL, iGL, SGL, iSGL, wGL, ...
std::string reg_label(RegKind k);

}  // namespace slimnet
