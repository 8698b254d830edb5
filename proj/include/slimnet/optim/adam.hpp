#pragma once

#include <cstdint>

#include "slimnet/backprop/gradient_set.hpp"

namespace slimnet {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

// First and second moments shaped like the trainable parameters.
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  GradientSet m;
  GradientSet v;

  static AdamState fresh(const NetworkParams& params, const AdamHyper& hyper = {});

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam step on weights, biases and batch-norm scale/shift.
// Running statistics are left alone. Throws NumericalError on non-finite
// gradients and ShapeError on shape mismatch.
void adam_step(AdamState& state, NetworkParams& params, const GradientSet& grads);

}  // namespace slimnet
