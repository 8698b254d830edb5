#include "slimnet/backprop/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slimnet/errors.hpp"

namespace slimnet {

std::string to_string(LossKind k) {
  return k == LossKind::mean_squared_error ? "mean_squared_error" : "softmax_cross_entropy";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mean_squared_error" || s == "mse") return LossKind::mean_squared_error;
  if (s == "softmax_cross_entropy" || s == "cross_entropy" || s == "ce") return LossKind::softmax_cross_entropy;
  throw ConfigError("unknown loss '" + s + "'");
}

Targets select_targets(const Targets& t, std::span<const std::size_t> rows) {
  Targets out;
  if (!t.values.empty()) out.values = row_slice(t.values, rows);
  if (!t.labels.empty()) {
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
      if (r >= t.labels.size()) throw IndexError("select_targets: row out of range");
      out.labels.push_back(t.labels[r]);
    }
  }
  return out;
}

namespace {

void check_targets(const Matrix& pred, const Targets& targets, LossKind kind) {
  if (kind == LossKind::mean_squared_error) {
    if (targets.values.rows() != pred.rows() || targets.values.cols() != pred.cols())
      throw ShapeError("regression targets do not match predictions");
  } else {
    if (targets.labels.size() != pred.rows()) throw ShapeError("label count does not match predictions");
    for (std::size_t y : targets.labels)
      if (y >= pred.cols())
        throw DataError("class label " + std::to_string(y) + " out of range for " + std::to_string(pred.cols()) +
                        " outputs");
  }
  if (pred.rows() == 0) throw ShapeError("loss on an empty batch");
}

// Row-wise softmax probabilities with max subtraction.
Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      z += out[c];
    }
    for (auto& v : out) v /= z;
  }
  return p;
}

}  // namespace

double loss(const Matrix& pred, const Targets& targets, LossKind kind) {
  check_targets(pred, targets, kind);
  if (kind == LossKind::mean_squared_error) {
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred.data()[i] - targets.values.data()[i];
      s += d * d;
    }
    return s / static_cast<double>(pred.size());
  }
  double s = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    auto in = pred.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    s += std::log(z) - (in[targets.labels[r]] - mx);
  }
  return s / static_cast<double>(pred.rows());
}

Matrix loss_gradient(const Matrix& pred, const Targets& targets, LossKind kind) {
  check_targets(pred, targets, kind);
  if (kind == LossKind::mean_squared_error) {
    Matrix g(pred.rows(), pred.cols());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) g.data()[i] = scale * (pred.data()[i] - targets.values.data()[i]);
    return g;
  }
  Matrix g = softmax(pred);
  const double inv_batch = 1.0 / static_cast<double>(pred.rows());
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    auto row = g.row(r);
    row[targets.labels[r]] -= 1.0;
    for (auto& v : row) v *= inv_batch;
  }
  return g;
}

namespace {

void check_grad_finite(const LayerGrads& g, std::size_t layer) {
  auto finite = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
  };
  if (!g.weights.all_finite() || !finite(g.bias) || !finite(g.bn_scale) || !finite(g.bn_shift))
    throw NumericalError("non-finite gradient in layer " + std::to_string(layer + 1));
}

}  // namespace

ObjectiveResult gradients(const NetworkParams& params, const Matrix& x, const Targets& targets, LossKind kind,
                          const RegularizerSpec& reg, const NeuronMaskSet& masks) {
  ForwardResult fwd = forward(params, x, Mode::train);
  ObjectiveResult result;
  result.data_loss = loss(fwd.output, targets, kind);
  result.reg_value = reg_value(params, reg, masks);
  result.objective = result.data_loss + reg.lambda * result.reg_value;
  if (!std::isfinite(result.objective)) throw NumericalError("non-finite objective");

  result.grads = GradientSet::zeros_like(params);
  Matrix upstream = loss_gradient(fwd.output, targets, kind);
  const std::size_t batch = x.rows();
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const Layer& layer = params.layers[li];
    const LayerTrace& t = fwd.trace.layers[li];
    LayerGrads& g = result.grads.layers[li];

    Matrix d_affine = std::move(upstream);
    if (layer.activation == Activation::relu) {
      for (std::size_t i = 0; i < d_affine.size(); ++i)
        if (!(t.affine.data()[i] > 0.0)) d_affine.data()[i] = 0.0;
    }

    Matrix d_linear;
    if (layer.batch_norm) {
      const std::size_t width = layer.out_dim();
      const double n = static_cast<double>(batch);
      Vector sum_d(width, 0.0), sum_d_xhat(width, 0.0);
      for (std::size_t r = 0; r < batch; ++r) {
        auto da = d_affine.row(r);
        auto xh = t.normalized.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          g.bn_shift[c] += da[c];
          g.bn_scale[c] += da[c] * xh[c];
        }
      }
      // d xhat = d_affine * scale; sums over the batch of d xhat and d xhat * xhat
      for (std::size_t c = 0; c < width; ++c) {
        sum_d[c] = g.bn_shift[c] * layer.bn_scale[c];
        sum_d_xhat[c] = g.bn_scale[c] * layer.bn_scale[c];
      }
      d_linear = Matrix(batch, width);
      for (std::size_t r = 0; r < batch; ++r) {
        auto da = d_affine.row(r);
        auto xh = t.normalized.row(r);
        auto out = d_linear.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          const double dxhat = da[c] * layer.bn_scale[c];
          out[c] = t.inv_std[c] / n * (n * dxhat - sum_d[c] - xh[c] * sum_d_xhat[c]);
        }
      }
    } else {
      d_linear = std::move(d_affine);
    }

    g.weights = matmul_tn(t.input, d_linear);
    if (!layer.bias.empty()) g.bias = column_sums(d_linear);
    if (li > 0) upstream = matmul_nt(d_linear, layer.weights);
    check_grad_finite(g, li);
  }

  add_reg_subgrad(params, reg, masks, reg.lambda, result.grads);
  result.trace = std::move(fwd.trace);
  return result;
}

double objective_value(const NetworkParams& params, const Matrix& x, const Targets& targets, LossKind kind,
                       const RegularizerSpec& reg, const NeuronMaskSet& masks) {
  const Matrix pred = predict(params, x, Mode::train);
  return loss(pred, targets, kind) + reg.lambda * reg_value(params, reg, masks);
}

GradCheckResult finite_diff_check(const NetworkParams& params, const Matrix& x, const Targets& targets,
                                  LossKind kind, const RegularizerSpec& reg, const NeuronMaskSet& masks,
                                  double h) {
  if (!(h > 0.0)) throw ParameterError("finite_diff_check: step h must be positive");
  const ObjectiveResult analytic = gradients(params, x, targets, kind, reg, masks);
  NetworkParams probe = params;
  GradCheckResult result;

  auto check_array = [&](std::size_t layer, const char* name, std::span<double> values,
                         std::span<const double> grad) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double f_plus = objective_value(probe, x, targets, kind, reg, masks);
      values[i] = saved - h;
      const double f_minus = objective_value(probe, x, targets, kind, reg, masks);
      values[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double err = std::abs(grad[i] - numeric) / std::max(1e-8, std::abs(numeric));
      ++result.checked;
      if (!(err <= result.max_rel_error)) {
        result.max_rel_error = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
        result.worst_layer = layer;
        result.worst_array = name;
        result.worst_index = i;
        result.analytic = grad[i];
        result.numeric = numeric;
      }
    }
  };

  for (std::size_t li = 0; li < probe.layers.size(); ++li) {
    Layer& l = probe.layers[li];
    const LayerGrads& g = analytic.grads.layers[li];
    check_array(li, "weights", l.weights.values(), g.weights.values());
    check_array(li, "bias", l.bias, g.bias);
    check_array(li, "bn_scale", l.bn_scale, g.bn_scale);
    check_array(li, "bn_shift", l.bn_shift, g.bn_shift);
  }
  return result;
}

}  // namespace slimnet
