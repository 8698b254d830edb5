#pragma once

#include <cstddef>
#include <vector>

#include "slimnet/model/network.hpp"

namespace slimnet {

inline constexpr double kDefaultSparsityThreshold = 1e-3;
inline constexpr double kDefaultPruneThreshold = 1e-3;

struct SparsityReport {
  double threshold = 0.0;
  std::vector<double> ratios;  // per weight matrix: count(|w| < threshold) / size
};

SparsityReport sparsity(const NetworkParams& params, double threshold);

// Per neuron layer 0..L: rows of W_{l+1} with norm >= threshold, and for the
// output layer the columns of W_L with norm >= threshold.
std::vector<std::size_t> active_neurons(const NetworkParams& params, double group_threshold);

struct LayerPruneReport {
  std::size_t original_width = 0;
  std::vector<std::size_t> kept;  // original indices still present
  std::size_t pruned = 0;
  // Constant contributions folded into the next layer, indexed by the next
  // layer's original neuron index. Empty for the output layer.
  Vector absorbed;
};

struct PruneReport {
  double group_threshold = 0.0;
  std::vector<LayerPruneReport> layers;  // neuron layers 0..L
};

struct PruneResult {
  NetworkParams compact;
  PruneReport report;
};

// Removes hidden neurons whose outgoing row norm is below the threshold (or
// exactly zero), and hidden neurons whose incoming column norm is below it
// after folding their constant eval-mode output into the next layer (its
// bias, or its running mean when it is a batch-norm layer). Input features
// with a dead row are zeroed rather than removed so the input width is kept.
// Repeats until nothing changes. Throws DegenerateNetworkError when a hidden
// layer would lose every neuron.
PruneResult prune_network(const NetworkParams& params, double group_threshold);

// max |predict(a) - predict(b)| over the probe batch, eval mode.
double compare_outputs(const NetworkParams& a, const NetworkParams& b, const Matrix& probe);

}  // namespace slimnet
