#include "slimnet/backprop/gradient_set.hpp"

#include "slimnet/errors.hpp"

namespace slimnet {

GradientSet GradientSet::zeros_like(const NetworkParams& params) {
  GradientSet g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    LayerGrads lg;
    lg.weights = Matrix(l.weights.rows(), l.weights.cols());
    lg.bias.assign(l.bias.size(), 0.0);
    lg.bn_scale.assign(l.bn_scale.size(), 0.0);
    lg.bn_shift.assign(l.bn_shift.size(), 0.0);
    g.layers.push_back(std::move(lg));
  }
  return g;
}

namespace {

void require_same(std::size_t a, std::size_t b, std::size_t layer) {
  if (a != b) throw ShapeError("gradient shape mismatch in layer " + std::to_string(layer + 1));
}

template <typename Net, typename Grads, typename Fn>
void visit(Net& params, Grads& grads, const Fn& fn) {
  if (params.layers.size() != grads.layers.size()) throw ShapeError("gradient depth mismatch");
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    auto& p = params.layers[li];
    auto& g = grads.layers[li];
    require_same(p.weights.rows(), g.weights.rows(), li);
    require_same(p.weights.cols(), g.weights.cols(), li);
    require_same(p.bias.size(), g.bias.size(), li);
    require_same(p.bn_scale.size(), g.bn_scale.size(), li);
    require_same(p.bn_shift.size(), g.bn_shift.size(), li);
    fn(li, p.weights.values(), g.weights.values());
    if (!p.bias.empty()) fn(li, std::span(p.bias), std::span(g.bias));
    if (!p.bn_scale.empty()) fn(li, std::span(p.bn_scale), std::span(g.bn_scale));
    if (!p.bn_shift.empty()) fn(li, std::span(p.bn_shift), std::span(g.bn_shift));
  }
}

}  // namespace

void for_each_param(NetworkParams& params, GradientSet& grads,
                    const std::function<void(std::size_t, std::span<double>, std::span<double>)>& fn) {
  visit(params, grads, fn);
}

void for_each_param(const NetworkParams& params, const GradientSet& grads,
                    const std::function<void(std::size_t, std::span<const double>, std::span<const double>)>& fn) {
  visit(params, grads, fn);
}

std::size_t trainable_count(const NetworkParams& params) {
  std::size_t n = 0;
  for (const auto& l : params.layers) n += l.weights.size() + l.bias.size() + l.bn_scale.size() + l.bn_shift.size();
  return n;
}

}  // namespace slimnet
