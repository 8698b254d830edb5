#pragma once

#include <functional>
#include <span>
#include <vector>

#include "slimnet/model/network.hpp"

namespace slimnet {

struct LayerGrads {
  Matrix weights;
  Vector bias;
  Vector bn_scale;
  Vector bn_shift;

  friend bool operator==(const LayerGrads&, const LayerGrads&) = default;
};

// Gradient arrays with the exact shapes of the trainable parameters of a
// NetworkParams (running statistics are not trainable).
struct GradientSet {
  std::vector<LayerGrads> layers;

  static GradientSet zeros_like(const NetworkParams& params);

  friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

// Visits every trainable array as (layer index, parameter span, gradient
// span) in a fixed order: weights, bias, scale, shift. Throws ShapeError if
// the shapes disagree.
void for_each_param(NetworkParams& params, GradientSet& grads,
                    const std::function<void(std::size_t, std::span<double>, std::span<double>)>& fn);

void for_each_param(const NetworkParams& params, const GradientSet& grads,
                    const std::function<void(std::size_t, std::span<const double>, std::span<const double>)>& fn);

// Counts scalar trainable parameters.
std::size_t trainable_count(const NetworkParams& params);

}  // namespace slimnet
