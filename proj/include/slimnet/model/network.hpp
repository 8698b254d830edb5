#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimnet/tensor/matrix.hpp"

namespace slimnet {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::relu;
  bool batch_norm = false;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kRunningStatMomentum = 0.9;

// One fully connected layer, y = act(bn(x W + b)).
//
// Weights are in_dim x out_dim, so row n holds the outgoing weights of input
// neuron n: the group that structured regularizers penalize. A batch-norm
// layer carries no linear bias (it would be cancelled by the batch mean);
// its shift parameter plays that role and `bias` is empty.
struct Layer {
  Activation activation = Activation::relu;
  bool batch_norm = false;
  Matrix weights;
  Vector bias;
  Vector bn_scale;
  Vector bn_shift;
  Vector running_mean;
  Vector running_var;

  std::size_t in_dim() const { return weights.rows(); }
  std::size_t out_dim() const { return weights.cols(); }
  LayerSpec spec() const { return {in_dim(), out_dim(), activation, batch_norm}; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct NetworkParams {
  std::vector<Layer> layers;

  std::size_t depth() const { return layers.size(); }
  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::vector<LayerSpec> specs() const;
  // Widths of neuron layers 0..L (inputs, hidden layers, outputs).
  std::vector<std::size_t> widths() const;
  std::size_t weight_count() const;

  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Hidden ReLU layers with optional batch norm, identity output layer.
std::vector<LayerSpec> mlp_specs(std::span<const std::size_t> widths, bool batch_norm);

// Checks dimension chaining and the output-layer convention. Throws
// ConfigError.
void validate_specs(std::span<const LayerSpec> specs);

// Weights ~ Normal(0, init_std^2) drawn from per-layer forks of `seed`;
// default init_std is sqrt(2 / fan_in). Biases and shifts 0, scales 1,
// running mean 0 and running variance 1.
NetworkParams init_network(std::span<const LayerSpec> specs, std::uint64_t seed,
                           std::optional<double> init_std = std::nullopt);

enum class Mode { train, eval };

struct LayerTrace {
  Matrix input;       // layer input
  Matrix linear;      // x W + b
  Matrix normalized;  // (linear - mean) / sqrt(var + eps), batch-norm layers only
  Matrix affine;      // value fed to the activation
  Matrix output;      // activation(affine)
  Vector batch_mean;  // train mode, batch-norm layers only
  Vector batch_var;   // biased batch variance
  Vector inv_std;     // 1 / sqrt(var + eps) of the statistics actually used
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

// Pure forward pass. Train mode normalizes with batch statistics and requires
// batch >= 2 when any layer uses batch norm; running statistics are not
// touched (see update_running_stats). Throws NumericalError naming the layer
// on non-finite values.
ForwardResult forward(const NetworkParams& params, const Matrix& x, Mode mode);

// Output only, without keeping the trace.
Matrix predict(const NetworkParams& params, const Matrix& x, Mode mode = Mode::eval);

// running <- momentum * running + (1 - momentum) * batch, with the unbiased
// batch variance.
void update_running_stats(NetworkParams& params, const ForwardTrace& trace);

// Replaces the running statistics with the exact batch statistics of `x`
// (biased variance) under the current weights, layer by layer, so that eval
// mode on `x` reproduces a full-batch train-mode pass.
void recalibrate_batch_norm(NetworkParams& params, const Matrix& x);

// Train-mode forward that also updates running statistics.
ForwardResult forward_train(NetworkParams& params, const Matrix& x);

// Relabels the neurons of hidden neuron layer `neuron_layer` (1..L-1): new
// neuron i is old neuron perm[i]. Throws ParameterError for the input or
// output layer or a non-bijective perm.
NetworkParams permute_hidden(const NetworkParams& params, std::size_t neuron_layer,
                             std::span<const std::size_t> perm);

}  // namespace slimnet
