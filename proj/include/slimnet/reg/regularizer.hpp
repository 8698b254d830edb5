#pragma once

// Group-lasso family penalties over the fully connected weight matrices.
//
// A group is one row of a weight matrix: the outgoing weights of one neuron.
// Biases and batch-norm parameters are never penalized. Partial kinds apply
// a per-layer binary mask over groups and only visit the kept rows, which is
// where their cost saving comes from.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slimnet/backprop/gradient_set.hpp"
#include "slimnet/reg/rational.hpp"

namespace slimnet {

enum class RegKind {
  none,
  l1,
  l2,
  group_lasso,
  sparse_group_lasso,
  weighted_gl,
  weighted_sgl,
  partial_gl,
  partial_sgl,
};

std::string to_string(RegKind k);
// Accepts the long names above and the short CLI names
// (none, l1, l2, gl, sgl, wgl, wsgl, pgl, psgl).
RegKind reg_kind_from_string(const std::string& s);
std::string short_name(RegKind k);

bool is_partial(RegKind k);
bool is_sparse(RegKind k);
bool is_weighted(RegKind k);

inline constexpr double kDefaultSmoothingEps = 1e-8;

struct RegularizerSpec {
  RegKind kind = RegKind::none;
  double lambda = 0.0;  // global factor, applied by the objective
  double alpha = 0.0;   // L1 share of the sparse kinds
  // Per-layer factors of the weighted kinds; empty means the default
  // (1 for the first half of the layers, 10 for the rest).
  std::vector<double> layer_weights;
  // Per-layer group weights sqrt(|p_l|); empty means sqrt(cols of W_l).
  std::vector<double> group_weights;
  // Group norms are evaluated as sqrt(|g|^2 + eps^2) - eps.
  double smoothing_eps = kDefaultSmoothingEps;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

std::vector<double> default_layer_weights(std::size_t depth);

enum class MaskPlacement { prefix, seeded_random };

std::string to_string(MaskPlacement p);
MaskPlacement mask_placement_from_string(const std::string& s);

// Binary vector over the groups (rows) of one weight matrix.
struct LayerMask {
  std::vector<std::uint8_t> bits;
  Rational zero_ratio;
  MaskPlacement placement = MaskPlacement::prefix;

  std::size_t zero_count() const;
  // Rows with bit 1, ascending.
  std::vector<std::size_t> kept_rows() const;
};

// One mask per weight matrix; empty for the non-partial kinds.
using NeuronMaskSet = std::vector<LayerMask>;

// Exactly floor(zero_ratio * n_groups) zeros, at the lowest indices (prefix)
// or at positions drawn from `seed`. Throws ConfigError for ratio > 1.
LayerMask build_mask(std::size_t n_groups, Rational zero_ratio, MaskPlacement placement,
                     std::uint64_t seed);

// Masks for every weight matrix of `params` with one global zero ratio.
NeuronMaskSet build_masks(const NetworkParams& params, Rational zero_ratio, MaskPlacement placement,
                          std::uint64_t seed);

// Mask set relabelled consistently with permute_hidden(params, neuron_layer, perm).
NeuronMaskSet permute_masks(const NeuronMaskSet& masks, std::size_t neuron_layer,
                            std::span<const std::size_t> perm);

// Euclidean norm of every row.
Vector group_norms(const Matrix& w);

// Penalty value R(theta), without the global lambda. Throws ConfigError when
// a partial kind has no masks (or masks are given to a full kind) and
// ShapeError when mask lengths disagree with the weights.
double reg_value(const NetworkParams& params, const RegularizerSpec& spec, const NeuronMaskSet& masks);

// Smoothed subgradient of R, same scale as reg_value (no lambda).
GradientSet reg_subgrad(const NetworkParams& params, const RegularizerSpec& spec,
                        const NeuronMaskSet& masks);

// grads += scale * dR/dtheta. Used by the objective to avoid an extra
// allocation per step.
void add_reg_subgrad(const NetworkParams& params, const RegularizerSpec& spec,
                     const NeuronMaskSet& masks, double scale, GradientSet& grads);

// Number of scalar weights entering the penalty sum.
std::size_t regularized_param_count(const NetworkParams& params, const RegularizerSpec& spec,
                                    const NeuronMaskSet& masks);

}  // namespace slimnet
