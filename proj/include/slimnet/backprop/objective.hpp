#pragma once

#include <string>
#include <vector>

#include "slimnet/backprop/gradient_set.hpp"
#include "slimnet/reg/regularizer.hpp"

namespace slimnet {

enum class LossKind { mean_squared_error, softmax_cross_entropy };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

// Regression targets use `values` (batch x outputs); classification targets
// use `labels`.
struct Targets {
  Matrix values;
  std::vector<std::size_t> labels;

  std::size_t size(LossKind kind) const { return kind == LossKind::mean_squared_error ? values.rows() : labels.size(); }
};

// Targets restricted to the listed rows.
Targets select_targets(const Targets& t, std::span<const std::size_t> rows);

// MSE: mean over batch and outputs of the squared error. Cross-entropy: mean
// over the batch of -log softmax(pred)[label], max-subtracted. Throws
// ShapeError on size mismatch and DataError for a label >= outputs.
double loss(const Matrix& pred, const Targets& targets, LossKind kind);

// d loss / d pred.
Matrix loss_gradient(const Matrix& pred, const Targets& targets, LossKind kind);

struct ObjectiveResult {
  double objective = 0.0;  // data_loss + lambda * reg_value
  double data_loss = 0.0;
  double reg_value = 0.0;
  GradientSet grads;
  ForwardTrace trace;  // train-mode trace, usable with update_running_stats
};

// Value and exact gradient of the training objective on one batch, with the
// forward pass in train mode (batch statistics, full batch-norm chain rule).
// ReLU has derivative 0 at 0. Throws NumericalError naming the layer when a
// non-finite value appears.
ObjectiveResult gradients(const NetworkParams& params, const Matrix& x, const Targets& targets, LossKind kind,
                          const RegularizerSpec& reg, const NeuronMaskSet& masks);

// Objective only (train-mode forward), for finite differences.
double objective_value(const NetworkParams& params, const Matrix& x, const Targets& targets, LossKind kind,
                       const RegularizerSpec& reg, const NeuronMaskSet& masks);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_layer = 0;
  std::string worst_array;  // weights, bias, bn_scale, bn_shift
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Central differences (f(p + h) - f(p - h)) / 2h for every trainable scalar,
// compared as |analytic - numeric| / max(1e-8, |numeric|). Throws
// ParameterError for h <= 0.
GradCheckResult finite_diff_check(const NetworkParams& params, const Matrix& x, const Targets& targets,
                                  LossKind kind, const RegularizerSpec& reg, const NeuronMaskSet& masks,
                                  double h);

}  // namespace slimnet
