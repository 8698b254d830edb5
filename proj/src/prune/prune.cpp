#include "slimnet/prune/prune.hpp"

#include <cmath>

#include "slimnet/errors.hpp"
#include "slimnet/reg/regularizer.hpp"

namespace slimnet {

SparsityReport sparsity(const NetworkParams& params, double threshold) {
  if (!(threshold >= 0.0)) throw ParameterError("sparsity threshold must be >= 0");
  SparsityReport rep;
  rep.threshold = threshold;
  for (const auto& l : params.layers) {
    std::size_t small = 0;
    for (double w : l.weights.values()) small += std::abs(w) < threshold;
    rep.ratios.push_back(l.weights.empty() ? 0.0 : static_cast<double>(small) / static_cast<double>(l.weights.size()));
  }
  return rep;
}

namespace {

double column_norm(const Matrix& w, std::size_t c) {
  double s = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) s += w(r, c) * w(r, c);
  return std::sqrt(s);
}

double row_norm(const Matrix& w, std::size_t r) {
  double s = 0.0;
  for (double v : w.row(r)) s += v * v;
  return std::sqrt(s);
}

bool dead(double norm, double threshold) { return norm < threshold || norm == 0.0; }

// Eval-mode output of neuron n of `layer` when all its incoming weights are 0.
double constant_output(const Layer& layer, std::size_t n) {
  double z = layer.bias.empty() ? 0.0 : layer.bias[n];
  if (layer.batch_norm) {
    z = layer.bn_scale[n] * (z - layer.running_mean[n]) / std::sqrt(layer.running_var[n] + kBatchNormEps) +
        layer.bn_shift[n];
  }
  return layer.activation == Activation::relu ? std::max(z, 0.0) : z;
}

template <typename T>
void erase_at(std::vector<T>& v, std::size_t i) {
  if (!v.empty()) v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
}

Matrix drop_column(const Matrix& w, std::size_t col) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < w.cols(); ++c)
    if (c != col) keep.push_back(c);
  return col_slice(w, keep);
}

Matrix drop_row(const Matrix& w, std::size_t row) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < w.rows(); ++r)
    if (r != row) keep.push_back(r);
  return row_slice(w, keep);
}

}  // namespace

std::vector<std::size_t> active_neurons(const NetworkParams& params, double group_threshold) {
  if (!(group_threshold >= 0.0)) throw ParameterError("group threshold must be >= 0");
  std::vector<std::size_t> counts;
  for (const auto& l : params.layers) {
    std::size_t n = 0;
    for (double norm : group_norms(l.weights)) n += norm >= group_threshold;
    counts.push_back(n);
  }
  const Matrix& last = params.layers.back().weights;
  std::size_t out = 0;
  for (std::size_t c = 0; c < last.cols(); ++c) out += column_norm(last, c) >= group_threshold;
  counts.push_back(out);
  return counts;
}

PruneResult prune_network(const NetworkParams& params, double group_threshold) {
  if (!(group_threshold >= 0.0)) throw ParameterError("group threshold must be >= 0");
  if (params.layers.empty()) throw ConfigError("cannot prune an empty network");
  PruneResult res;
  NetworkParams& net = res.compact;
  net = params;
  const std::size_t depth = net.layers.size();
  const auto widths = params.widths();

  res.report.group_threshold = group_threshold;
  res.report.layers.resize(depth + 1);
  std::vector<std::vector<std::size_t>> original(depth + 1);
  for (std::size_t h = 0; h <= depth; ++h) {
    auto& lr = res.report.layers[h];
    lr.original_width = widths[h];
    if (h < depth) lr.absorbed.assign(widths[h + 1], 0.0);
    for (std::size_t i = 0; i < widths[h]; ++i) original[h].push_back(i);
  }
  std::vector<bool> input_zeroed(widths[0], false);

  bool changed = true;
  while (changed) {
    changed = false;

    // Input features: zero dead rows of the first weight matrix.
    Matrix& w0 = net.layers[0].weights;
    for (std::size_t r = 0; r < w0.rows(); ++r) {
      if (!input_zeroed[r] && dead(row_norm(w0, r), group_threshold)) {
        for (auto& v : w0.row(r)) v = 0.0;
        input_zeroed[r] = true;
        changed = true;
      }
    }

    for (std::size_t h = 1; h < depth; ++h) {
      Layer& in_layer = net.layers[h - 1];
      Layer& out_layer = net.layers[h];
      for (std::size_t n = in_layer.out_dim(); n-- > 0;) {
        const bool no_output = dead(row_norm(out_layer.weights, n), group_threshold);
        const bool no_input = dead(column_norm(in_layer.weights, n), group_threshold);
        if (!no_output && !no_input) continue;
        if (in_layer.out_dim() == 1) {
          throw DegenerateNetworkError("pruning would remove every neuron of hidden layer " + std::to_string(h));
        }
        if (!no_output) {
          const double c = constant_output(in_layer, n);
          auto row = out_layer.weights.row(n);
          for (std::size_t j = 0; j < out_layer.out_dim(); ++j) {
            const double shift = c * row[j];
            if (out_layer.batch_norm)
              out_layer.running_mean[j] -= shift;
            else
              out_layer.bias[j] += shift;
            res.report.layers[h].absorbed[original[h + 1][j]] += shift;
          }
        }
        in_layer.weights = drop_column(in_layer.weights, n);
        erase_at(in_layer.bias, n);
        erase_at(in_layer.bn_scale, n);
        erase_at(in_layer.bn_shift, n);
        erase_at(in_layer.running_mean, n);
        erase_at(in_layer.running_var, n);
        out_layer.weights = drop_row(out_layer.weights, n);
        original[h].erase(original[h].begin() + static_cast<std::ptrdiff_t>(n));
        changed = true;
      }
    }
  }

  for (std::size_t h = 0; h <= depth; ++h) {
    auto& lr = res.report.layers[h];
    if (h == 0) {
      for (std::size_t i = 0; i < widths[0]; ++i)
        if (!input_zeroed[i]) lr.kept.push_back(i);
    } else {
      lr.kept = original[h];
    }
    lr.pruned = lr.original_width - lr.kept.size();
  }
  return res;
}

double compare_outputs(const NetworkParams& a, const NetworkParams& b, const Matrix& probe) {
  if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim())
    throw ShapeError("compare_outputs: networks have different input or output widths");
  return max_abs_diff(predict(a, probe), predict(b, probe));
}

}  // namespace slimnet
