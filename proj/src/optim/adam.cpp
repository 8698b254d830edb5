#include "slimnet/optim/adam.hpp"

#include <cmath>
#include <utility>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/kernels.hpp"

namespace slimnet {

AdamState AdamState::fresh(const NetworkParams& params, const AdamHyper& hyper) {
  return {hyper, 0, GradientSet::zeros_like(params), GradientSet::zeros_like(params)};
}

void adam_step(AdamState& state, NetworkParams& params, const GradientSet& grads) {
  // Validate everything before mutating anything.
  for_each_param(params, state.m, [](std::size_t, std::span<double>, std::span<double>) {});
  for_each_param(params, state.v, [](std::size_t, std::span<double>, std::span<double>) {});
  for_each_param(std::as_const(params), grads, [](std::size_t layer, std::span<const double>, std::span<const double> g) {
    for (double v : g)
      if (!std::isfinite(v)) throw NumericalError("non-finite gradient entry in layer " + std::to_string(layer + 1));
  });

  const std::uint64_t t = state.step + 1;
  const auto& h = state.hyper;
  const kernels::AdamCoeffs coeffs{h.lr,
                                   h.beta1,
                                   h.beta2,
                                   h.eps,
                                   1.0 - std::pow(h.beta1, static_cast<double>(t)),
                                   1.0 - std::pow(h.beta2, static_cast<double>(t))};
  const auto& k = kernels::active();

  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    Layer& p = params.layers[li];
    const LayerGrads& g = grads.layers[li];
    LayerGrads& m = state.m.layers[li];
    LayerGrads& v = state.v.layers[li];
    k.adam_update(p.weights.size(), coeffs, g.weights.data(), m.weights.data(), v.weights.data(), p.weights.data());
    k.adam_update(p.bias.size(), coeffs, g.bias.data(), m.bias.data(), v.bias.data(), p.bias.data());
    k.adam_update(p.bn_scale.size(), coeffs, g.bn_scale.data(), m.bn_scale.data(), v.bn_scale.data(),
                  p.bn_scale.data());
    k.adam_update(p.bn_shift.size(), coeffs, g.bn_shift.data(), m.bn_shift.data(), v.bn_shift.data(),
                  p.bn_shift.data());
  }
  state.step = t;
}

}  // namespace slimnet
