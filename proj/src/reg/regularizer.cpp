#include "slimnet/reg/regularizer.hpp"

#include <cmath>
#include <iostream>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/kernels.hpp"
#include "slimnet/tensor/rng.hpp"

namespace slimnet {

std::string to_string(RegKind k) {
  switch (k) {
    case RegKind::none: return "none";
    case RegKind::l1: return "l1";
    case RegKind::l2: return "l2";
    case RegKind::group_lasso: return "group_lasso";
    case RegKind::sparse_group_lasso: return "sparse_group_lasso";
    case RegKind::weighted_gl: return "weighted_gl";
    case RegKind::weighted_sgl: return "weighted_sgl";
    case RegKind::partial_gl: return "partial_gl";
    case RegKind::partial_sgl: return "partial_sgl";
  }
  return "none";
}

std::string short_name(RegKind k) {
  switch (k) {
    case RegKind::none: return "none";
    case RegKind::l1: return "l1";
    case RegKind::l2: return "l2";
    case RegKind::group_lasso: return "gl";
    case RegKind::sparse_group_lasso: return "sgl";
    case RegKind::weighted_gl: return "wgl";
    case RegKind::weighted_sgl: return "wsgl";
    case RegKind::partial_gl: return "pgl";
    case RegKind::partial_sgl: return "psgl";
  }
  return "none";
}

RegKind reg_kind_from_string(const std::string& s) {
  for (RegKind k : {RegKind::none, RegKind::l1, RegKind::l2, RegKind::group_lasso, RegKind::sparse_group_lasso,
                    RegKind::weighted_gl, RegKind::weighted_sgl, RegKind::partial_gl, RegKind::partial_sgl}) {
    if (s == to_string(k) || s == short_name(k)) return k;
  }
  throw ConfigError("unknown regularizer '" + s + "'");
}

bool is_partial(RegKind k) { return k == RegKind::partial_gl || k == RegKind::partial_sgl; }

bool is_sparse(RegKind k) {
  return k == RegKind::sparse_group_lasso || k == RegKind::weighted_sgl || k == RegKind::partial_sgl;
}

bool is_weighted(RegKind k) { return k == RegKind::weighted_gl || k == RegKind::weighted_sgl; }

void RegularizerSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite value >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(smoothing_eps >= 0.0)) throw ConfigError("smoothing_eps must be >= 0");
  for (double w : layer_weights)
    if (!(w >= 0.0)) throw ConfigError("layer weights must be >= 0");
  for (double w : group_weights)
    if (!(w >= 0.0)) throw ConfigError("group weights must be >= 0");
}

std::vector<double> default_layer_weights(std::size_t depth) {
  std::vector<double> w(depth, 10.0);
  for (std::size_t l = 0; l < depth / 2; ++l) w[l] = 1.0;
  return w;
}

std::string to_string(MaskPlacement p) { return p == MaskPlacement::prefix ? "prefix" : "seeded_random"; }

MaskPlacement mask_placement_from_string(const std::string& s) {
  if (s == "prefix") return MaskPlacement::prefix;
  if (s == "seeded_random" || s == "random") return MaskPlacement::seeded_random;
  throw ConfigError("unknown mask placement '" + s + "'");
}

std::size_t LayerMask::zero_count() const {
  std::size_t z = 0;
  for (auto b : bits) z += b == 0;
  return z;
}

std::vector<std::size_t> LayerMask::kept_rows() const {
  std::vector<std::size_t> rows;
  rows.reserve(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) rows.push_back(i);
  return rows;
}

LayerMask build_mask(std::size_t n_groups, Rational zero_ratio, MaskPlacement placement, std::uint64_t seed) {
  if (zero_ratio.num > zero_ratio.den) throw ConfigError("zero ratio " + zero_ratio.str() + " exceeds 1");
  LayerMask mask;
  mask.zero_ratio = zero_ratio;
  mask.placement = placement;
  mask.bits.assign(n_groups, 1);
  const std::size_t zeros = zero_ratio.floor_times(n_groups);
  if (n_groups > 0 && zeros == n_groups) {
    std::clog << "slimnet: warning: zero ratio " << zero_ratio.str() << " leaves a layer of " << n_groups
              << " groups unregularized\n";
  }
  if (placement == MaskPlacement::prefix) {
    for (std::size_t i = 0; i < zeros; ++i) mask.bits[i] = 0;
  } else {
    RngStream rng(seed);
    const auto order = shuffled_indices(rng, n_groups);
    for (std::size_t i = 0; i < zeros; ++i) mask.bits[order[i]] = 0;
  }
  return mask;
}

NeuronMaskSet build_masks(const NetworkParams& params, Rational zero_ratio, MaskPlacement placement,
                          std::uint64_t seed) {
  NeuronMaskSet masks;
  for (std::size_t l = 0; l < params.layers.size(); ++l)
    masks.push_back(build_mask(params.layers[l].weights.rows(), zero_ratio, placement, mix_seed(seed, l)));
  return masks;
}

NeuronMaskSet permute_masks(const NeuronMaskSet& masks, std::size_t neuron_layer,
                            std::span<const std::size_t> perm) {
  if (neuron_layer >= masks.size()) throw ParameterError("permute_masks: layer out of range");
  NeuronMaskSet out = masks;
  const auto& src = masks[neuron_layer].bits;
  if (perm.size() != src.size()) throw ParameterError("permute_masks: permutation has the wrong length");
  for (std::size_t i = 0; i < perm.size(); ++i) out[neuron_layer].bits[i] = src[perm[i]];
  return out;
}

Vector group_norms(const Matrix& w) {
  const auto& k = kernels::active();
  Vector norms(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) norms[r] = std::sqrt(k.sum_squares(w.row(r).data(), w.cols()));
  return norms;
}

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct LayerPlan {
  std::vector<std::size_t> rows;  // groups entering the penalty
  double group_weight = 1.0;      // sqrt(|p_l|)
  double layer_weight = 1.0;      // lambda_l for weighted kinds, else 1
};

std::vector<LayerPlan> plan(const NetworkParams& params, const RegularizerSpec& spec, const NeuronMaskSet& masks) {
  spec.validate();
  const std::size_t depth = params.layers.size();
  const bool partial = is_partial(spec.kind);
  if (partial && masks.size() != depth) {
    throw ConfigError("regularizer " + to_string(spec.kind) + " needs one mask per weight matrix (got " +
                      std::to_string(masks.size()) + ", need " + std::to_string(depth) + ")");
  }
  if (!partial && !masks.empty()) throw ConfigError("masks supplied to non-partial regularizer " + to_string(spec.kind));
  if (!spec.group_weights.empty() && spec.group_weights.size() != depth)
    throw ConfigError("group_weights needs one entry per weight matrix");
  if (!spec.layer_weights.empty() && spec.layer_weights.size() != depth)
    throw ConfigError("layer_weights needs one entry per weight matrix");
  const auto layer_w = spec.layer_weights.empty() ? default_layer_weights(depth) : spec.layer_weights;

  std::vector<LayerPlan> plans(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const Matrix& w = params.layers[l].weights;
    LayerPlan& p = plans[l];
    if (partial) {
      if (masks[l].bits.size() != w.rows()) {
        throw ShapeError("mask for layer " + std::to_string(l + 1) + " has " + std::to_string(masks[l].bits.size()) +
                         " bits, weight matrix has " + std::to_string(w.rows()) + " rows");
      }
      p.rows = masks[l].kept_rows();
    } else {
      p.rows.resize(w.rows());
      for (std::size_t r = 0; r < w.rows(); ++r) p.rows[r] = r;
    }
    p.group_weight = spec.group_weights.empty() ? std::sqrt(static_cast<double>(w.cols())) : spec.group_weights[l];
    p.layer_weight = is_weighted(spec.kind) ? layer_w[l] : 1.0;
  }
  return plans;
}

bool uses_group_term(RegKind k) { return k != RegKind::none && k != RegKind::l1 && k != RegKind::l2; }
bool uses_l1_term(RegKind k) { return k == RegKind::l1 || is_sparse(k); }

double smoothed_norm(double sum_sq, double eps) { return std::sqrt(sum_sq + eps * eps) - eps; }

}  // namespace

double reg_value(const NetworkParams& params, const RegularizerSpec& spec, const NeuronMaskSet& masks) {
  const auto plans = plan(params, spec, masks);
  if (spec.kind == RegKind::none) return 0.0;
  const auto& k = kernels::active();
  const bool group = uses_group_term(spec.kind);
  const bool l1 = uses_l1_term(spec.kind);
  CompensatedSum group_total, l1_total, l2_total;
  for (std::size_t l = 0; l < plans.size(); ++l) {
    const Matrix& w = params.layers[l].weights;
    const LayerPlan& p = plans[l];
    CompensatedSum group_layer, l1_layer;
    for (std::size_t r : p.rows) {
      const double* row = w.row(r).data();
      if (group || spec.kind == RegKind::l2) {
        const double ss = k.sum_squares(row, w.cols());
        if (group) group_layer.add(smoothed_norm(ss, spec.smoothing_eps));
        if (spec.kind == RegKind::l2) l2_total.add(ss);
      }
      if (l1) {
        double a = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) a += std::abs(row[c]);
        l1_layer.add(a);
      }
    }
    group_total.add(p.layer_weight * p.group_weight * group_layer.value());
    l1_total.add(p.layer_weight * l1_layer.value());
  }
  switch (spec.kind) {
    case RegKind::l1: return l1_total.value();
    case RegKind::l2: return l2_total.value();
    case RegKind::group_lasso:
    case RegKind::weighted_gl:
    case RegKind::partial_gl: return group_total.value();
    case RegKind::sparse_group_lasso:
    case RegKind::weighted_sgl:
    case RegKind::partial_sgl: return (1.0 - spec.alpha) * group_total.value() + spec.alpha * l1_total.value();
    case RegKind::none: break;
  }
  return 0.0;
}

void add_reg_subgrad(const NetworkParams& params, const RegularizerSpec& spec, const NeuronMaskSet& masks,
                     double scale, GradientSet& grads) {
  const auto plans = plan(params, spec, masks);
  if (grads.layers.size() != params.layers.size()) throw ShapeError("gradient depth mismatch");
  if (spec.kind == RegKind::none || scale == 0.0) return;
  const auto& k = kernels::active();
  const bool group = uses_group_term(spec.kind);
  const bool l1 = uses_l1_term(spec.kind);
  const double group_share = is_sparse(spec.kind) ? 1.0 - spec.alpha : 1.0;
  const double l1_share = is_sparse(spec.kind) ? spec.alpha : 1.0;
  const double eps_sq = spec.smoothing_eps * spec.smoothing_eps;
  for (std::size_t l = 0; l < plans.size(); ++l) {
    const Matrix& w = params.layers[l].weights;
    Matrix& g = grads.layers[l].weights;
    if (g.rows() != w.rows() || g.cols() != w.cols()) throw ShapeError("gradient shape mismatch");
    const LayerPlan& p = plans[l];
    const double group_coef = scale * group_share * p.layer_weight * p.group_weight;
    const double l1_coef = scale * l1_share * p.layer_weight;
    const std::size_t cols = w.cols();
    for (std::size_t r : p.rows) {
      const double* row = w.row(r).data();
      double* grow = g.row(r).data();
      if (group && group_coef != 0.0) {
        const double denom = std::sqrt(k.sum_squares(row, cols) + eps_sq);
        if (denom > 0.0) k.axpy(cols, group_coef / denom, row, grow);
      }
      if (l1 && l1_coef != 0.0) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double v = row[c];
          grow[c] += v > 0.0 ? l1_coef : (v < 0.0 ? -l1_coef : 0.0);
        }
      }
      if (spec.kind == RegKind::l2) k.axpy(cols, 2.0 * scale, row, grow);
    }
  }
}

GradientSet reg_subgrad(const NetworkParams& params, const RegularizerSpec& spec, const NeuronMaskSet& masks) {
  GradientSet g = GradientSet::zeros_like(params);
  add_reg_subgrad(params, spec, masks, 1.0, g);
  return g;
}

std::size_t regularized_param_count(const NetworkParams& params, const RegularizerSpec& spec,
                                    const NeuronMaskSet& masks) {
  const auto plans = plan(params, spec, masks);
  if (spec.kind == RegKind::none) return 0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < plans.size(); ++l) n += plans[l].rows.size() * params.layers[l].weights.cols();
  return n;
}

}  // namespace slimnet
