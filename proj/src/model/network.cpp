#include "slimnet/model/network.hpp"

#include <algorithm>
#include <cmath>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/rng.hpp"

namespace slimnet {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "'");
}

std::vector<LayerSpec> NetworkParams::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.spec());
  return out;
}

std::vector<std::size_t> NetworkParams::widths() const {
  std::vector<std::size_t> w;
  if (layers.empty()) return w;
  w.push_back(input_dim());
  for (const auto& l : layers) w.push_back(l.out_dim());
  return w;
}

std::size_t NetworkParams::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size();
  return n;
}

std::vector<LayerSpec> mlp_specs(std::span<const std::size_t> widths, bool batch_norm) {
  if (widths.size() < 2) throw ConfigError("a network needs at least input and output widths");
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool output = i + 2 == widths.size();
    specs.push_back({widths[i], widths[i + 1], output ? Activation::identity : Activation::relu,
                     output ? false : batch_norm});
  }
  return specs;
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw ConfigError("empty layer specification");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].in_dim == 0 || specs[i].out_dim == 0)
      throw ConfigError("layer " + std::to_string(i + 1) + " has a zero dimension");
    if (i > 0 && specs[i].in_dim != specs[i - 1].out_dim)
      throw ConfigError("layer " + std::to_string(i + 1) + " input width does not match layer " +
                        std::to_string(i) + " output width");
  }
  if (specs.back().activation != Activation::identity || specs.back().batch_norm)
    throw ConfigError("the output layer must use identity activation without batch norm");
}

NetworkParams init_network(std::span<const LayerSpec> specs, std::uint64_t seed,
                           std::optional<double> init_std) {
  validate_specs(specs);
  if (init_std && !(*init_std > 0.0)) throw ParameterError("init_std must be positive");
  const RngStream root(seed);
  NetworkParams net;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    RngStream rng = root.fork(l);
    const double std = init_std ? *init_std : std::sqrt(2.0 / static_cast<double>(s.in_dim));
    Layer layer;
    layer.activation = s.activation;
    layer.batch_norm = s.batch_norm;
    layer.weights = Matrix(s.in_dim, s.out_dim, normal_draws(rng, s.in_dim * s.out_dim, 0.0, std));
    if (s.batch_norm) {
      layer.bn_scale.assign(s.out_dim, 1.0);
      layer.bn_shift.assign(s.out_dim, 0.0);
      layer.running_mean.assign(s.out_dim, 0.0);
      layer.running_var.assign(s.out_dim, 1.0);
    } else {
      layer.bias.assign(s.out_dim, 0.0);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

void check_finite(const Matrix& m, std::size_t layer, const char* stage) {
  if (!m.all_finite()) {
    throw NumericalError("non-finite " + std::string(stage) + " in layer " + std::to_string(layer + 1));
  }
}

// Column means and biased variances.
void batch_moments(const Matrix& linear, Vector& mean, Vector& var) {
  const std::size_t batch = linear.rows();
  const std::size_t width = linear.cols();
  mean = column_sums(linear);
  for (auto& m : mean) m /= static_cast<double>(batch);
  var.assign(width, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = linear.row(r);
    for (std::size_t c = 0; c < width; ++c) {
      const double d = row[c] - mean[c];
      var[c] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<double>(batch);
}

ForwardResult run_forward(const NetworkParams& params, const Matrix& x, Mode mode, bool keep_trace) {
  if (params.layers.empty()) throw ConfigError("forward on an empty network");
  const std::size_t batch = x.rows();
  if (batch == 0) throw ShapeError("forward on an empty batch");
  ForwardResult result;
  Matrix h = x;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const Layer& layer = params.layers[li];
    if (h.cols() != layer.in_dim()) {
      throw ShapeError("layer " + std::to_string(li + 1) + " expects " + std::to_string(layer.in_dim()) +
                       " inputs, got " + std::to_string(h.cols()));
    }
    LayerTrace t;
    Matrix linear = matmul(h, layer.weights);
    if (!layer.bias.empty()) add_row_vector(linear, layer.bias);
    check_finite(linear, li, "pre-activation");

    Matrix affine;
    if (layer.batch_norm) {
      const std::size_t width = layer.out_dim();
      Vector mean(width), var(width), inv_std(width);
      if (mode == Mode::train) {
        if (batch < 2) {
          throw ParameterError("batch norm in train mode needs a batch of at least 2 (layer " +
                               std::to_string(li + 1) + ")");
        }
        batch_moments(linear, mean, var);
      } else {
        mean = layer.running_mean;
        var = layer.running_var;
      }
      for (std::size_t c = 0; c < width; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kBatchNormEps);
      Matrix normalized(batch, width);
      affine = Matrix(batch, width);
      for (std::size_t r = 0; r < batch; ++r) {
        auto in = linear.row(r);
        auto nr = normalized.row(r);
        auto ar = affine.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          nr[c] = (in[c] - mean[c]) * inv_std[c];
          ar[c] = layer.bn_scale[c] * nr[c] + layer.bn_shift[c];
        }
      }
      check_finite(affine, li, "batch-norm output");
      if (keep_trace) {
        t.normalized = std::move(normalized);
        if (mode == Mode::train) {
          t.batch_mean = std::move(mean);
          t.batch_var = std::move(var);
        }
        t.inv_std = std::move(inv_std);
      }
    } else {
      affine = linear;
    }

    Matrix out = affine;
    if (layer.activation == Activation::relu) {
      for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
    }
    if (keep_trace) {
      t.input = std::move(h);
      t.linear = std::move(linear);
      t.affine = std::move(affine);
      t.output = out;
      result.trace.layers.push_back(std::move(t));
    }
    h = std::move(out);
  }
  result.output = std::move(h);
  return result;
}

}  // namespace

ForwardResult forward(const NetworkParams& params, const Matrix& x, Mode mode) {
  return run_forward(params, x, mode, true);
}

Matrix predict(const NetworkParams& params, const Matrix& x, Mode mode) {
  return run_forward(params, x, mode, false).output;
}

void update_running_stats(NetworkParams& params, const ForwardTrace& trace) {
  if (trace.layers.size() != params.layers.size()) throw ShapeError("trace does not match network depth");
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    Layer& layer = params.layers[li];
    const LayerTrace& t = trace.layers[li];
    if (!layer.batch_norm) continue;
    if (t.batch_mean.size() != layer.out_dim()) throw ShapeError("trace lacks batch statistics");
    const double n = static_cast<double>(t.input.rows());
    const double unbias = n / (n - 1.0);
    for (std::size_t c = 0; c < layer.out_dim(); ++c) {
      layer.running_mean[c] =
          kRunningStatMomentum * layer.running_mean[c] + (1.0 - kRunningStatMomentum) * t.batch_mean[c];
      layer.running_var[c] =
          kRunningStatMomentum * layer.running_var[c] + (1.0 - kRunningStatMomentum) * t.batch_var[c] * unbias;
    }
  }
}

void recalibrate_batch_norm(NetworkParams& params, const Matrix& x) {
  if (x.rows() < 2) throw ParameterError("batch-norm recalibration needs at least 2 rows");
  Matrix h = x;
  for (auto& layer : params.layers) {
    if (layer.batch_norm) {
      Matrix linear = matmul(h, layer.weights);
      if (!layer.bias.empty()) add_row_vector(linear, layer.bias);
      batch_moments(linear, layer.running_mean, layer.running_var);
    }
    h = predict(NetworkParams{{layer}}, h, Mode::eval);
  }
}

ForwardResult forward_train(NetworkParams& params, const Matrix& x) {
  ForwardResult r = forward(params, x, Mode::train);
  update_running_stats(params, r.trace);
  return r;
}

namespace {

template <typename T>
std::vector<T> permuted(const std::vector<T>& v, std::span<const std::size_t> perm) {
  if (v.empty()) return v;
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = v[perm[i]];
  return out;
}

}  // namespace

NetworkParams permute_hidden(const NetworkParams& params, std::size_t neuron_layer,
                             std::span<const std::size_t> perm) {
  if (neuron_layer == 0 || neuron_layer >= params.layers.size()) {
    throw ParameterError("permute_hidden: neuron layer " + std::to_string(neuron_layer) +
                         " is not a hidden layer");
  }
  const Layer& src = params.layers[neuron_layer - 1];
  const std::size_t width = src.out_dim();
  if (perm.size() != width) throw ParameterError("permute_hidden: permutation has the wrong length");
  std::vector<bool> seen(width, false);
  for (std::size_t p : perm) {
    if (p >= width || seen[p]) throw ParameterError("permute_hidden: not a permutation");
    seen[p] = true;
  }
  NetworkParams out = params;
  Layer& into = out.layers[neuron_layer - 1];
  into.weights = col_slice(src.weights, perm);
  into.bias = permuted(src.bias, perm);
  into.bn_scale = permuted(src.bn_scale, perm);
  into.bn_shift = permuted(src.bn_shift, perm);
  into.running_mean = permuted(src.running_mean, perm);
  into.running_var = permuted(src.running_var, perm);
  Layer& next = out.layers[neuron_layer];
  next.weights = row_slice(params.layers[neuron_layer].weights, perm);
  return out;
}

}  // namespace slimnet
