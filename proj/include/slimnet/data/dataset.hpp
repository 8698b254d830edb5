#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slimnet/backprop/objective.hpp"
#include "slimnet/tensor/matrix.hpp"

namespace slimnet {

enum class TaskKind { regression, classification };

std::string to_string(TaskKind t);

struct FeatureStats {
  Vector mean;
  Vector std;  // floored at kStdFloor

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

inline constexpr double kStdFloor = 1e-12;

struct Dataset {
  Matrix features;
  Vector targets;  // regression value, or class index stored exactly
  TaskKind task = TaskKind::regression;
  std::size_t n_classes = 0;
  std::optional<FeatureStats> feature_stats;  // set when features were z-scored

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }

  // Loss targets for the listed rows (all rows when empty).
  Targets targets_for(std::span<const std::size_t> rows = {}) const;
  std::vector<std::size_t> labels() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows);

// y = -x^2 sampled at x_i = -1 + 2i/(n-1). Throws ParameterError for n < 2.
Dataset gen_toy(std::size_t n);

// Midpoints between consecutive grid points of gen_toy(n): n - 1 samples.
Dataset gen_toy_midpoints(std::size_t n);

struct TableOptions {
  std::filesystem::path path;
  int target_column = -1;  // negative counts from the end
  char delimiter = ',';    // ' ' splits on runs of blanks and tabs
  bool header = false;
  bool normalize = false;
  TaskKind task = TaskKind::regression;
};

// Throws DataError for a missing file, ragged rows (with line number) or a
// non-numeric cell. Classification targets are mapped to contiguous 0-based
// indices in ascending order of their original values.
Dataset load_table(const TableOptions& opts);

// IDX image/label pair (plain or gzip-compressed). Images are flattened and
// scaled by 1/255. Throws DataError on a bad magic number, truncated data or
// mismatched counts.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

struct IdxArray {
  std::uint8_t type_code = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

// Raw unsigned-byte IDX payload, checked against `expected_magic`.
IdxArray read_idx(const std::filesystem::path& path, std::uint32_t expected_magic);

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Per-column z-scoring.
FeatureStats fit_standardizer(const Matrix& m);
Matrix standardize(const Matrix& m, const FeatureStats& stats);
Matrix destandardize(const Matrix& m, const FeatureStats& stats);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = false;
};

// Disjoint, exhaustive, seeded split with floor(fraction * N) training rows.
// Stratified splits give each class floor or ceil of its share.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Row indices per mini-batch for one epoch. batch_size 0 means one full
// batch. Throws ParameterError for n == 0.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle);

}  // namespace slimnet
