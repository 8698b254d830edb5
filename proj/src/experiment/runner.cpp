#include "slimnet/experiment/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>

#include "slimnet/errors.hpp"
#include "slimnet/experiment/report.hpp"
#include "slimnet/tensor/rng.hpp"

namespace slimnet {

bool RunReport::same_results(const RunReport& other) const {
  RunReport a = *this;
  RunReport b = other;
  a.wall_time_s = b.wall_time_s = 0.0;
  return a == b;
}

namespace {

Dataset truncate(Dataset ds, std::size_t max_rows) {
  if (max_rows == 0 || max_rows >= ds.size()) return ds;
  std::vector<std::size_t> rows(max_rows);
  for (std::size_t i = 0; i < max_rows; ++i) rows[i] = i;
  return subset(ds, rows);
}

Matrix target_column(const Dataset& ds) {
  Matrix m(ds.size(), 1);
  for (std::size_t i = 0; i < ds.size(); ++i) m(i, 0) = ds.targets[i];
  return m;
}

void set_targets(Dataset& ds, const Matrix& m) {
  for (std::size_t i = 0; i < ds.size(); ++i) ds.targets[i] = m(i, 0);
}

// Empty when the network fits the data, otherwise the reason.
std::string fit_problem(const std::vector<std::size_t>& widths, const PreparedData& data) {
  if (widths.front() != data.train.dim())
    return "network input width " + std::to_string(widths.front()) + " does not match " +
           std::to_string(data.train.dim()) + " data features";
  if (data.train.task == TaskKind::regression && widths.back() != 1)
    return "regression needs output width 1, network has " + std::to_string(widths.back());
  if (data.train.task == TaskKind::classification && widths.back() < data.train.n_classes)
    return "network has " + std::to_string(widths.back()) + " outputs for " +
           std::to_string(data.train.n_classes) + " classes";
  return {};
}

struct Evaluation {
  double loss = 0.0;
  double metric = 0.0;  // loss for regression, accuracy for classification
};

Evaluation evaluate(const NetworkParams& params, const Dataset& ds, LossKind kind) {
  const Matrix pred = predict(params, ds.features, Mode::eval);
  Evaluation e;
  e.loss = loss(pred, ds.targets_for(), kind);
  if (ds.task == TaskKind::regression) {
    e.metric = e.loss;
  } else {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      const auto row = pred.row(i);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == static_cast<std::size_t>(ds.targets[i]);
    }
    e.metric = static_cast<double>(correct) / static_cast<double>(pred.rows());
  }
  return e;
}

bool meets(double value, double target, TaskKind task) {
  return task == TaskKind::regression ? value <= target : value >= target;
}

std::vector<std::vector<std::size_t>> epoch_batches(const ExperimentConfig& cfg, std::size_t n, std::size_t epoch) {
  const std::size_t bs = cfg.batch_size == 0 || cfg.batch_size >= n ? n : cfg.batch_size;
  auto out = batches(n, bs, batch_seed(cfg, epoch), bs < n);
  // A one-row batch has no batch statistics; fold it into its predecessor.
  if (cfg.batch_norm && out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

// Runs `epochs` epochs of Adam on params and fills the report.
void train_epochs(const ExperimentConfig& cfg, const PreparedData& data, NetworkParams& params, AdamState& opt,
                  const NeuronMaskSet& masks, std::size_t epochs, std::optional<double> target, RunReport& rep) {
  const Dataset& train = data.train;
  const Targets all_targets = train.targets_for();
  const TaskKind task = train.task;
  if (target && meets(evaluate(params, train, cfg.loss).metric, *target, task)) rep.steps_to_target = 0;

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    double obj_sum = 0.0;
    double loss_sum = 0.0;
    const auto plan = epoch_batches(cfg, train.size(), epoch);
    for (const auto& rows : plan) {
      ObjectiveResult res;
      try {
        if (rows.size() == train.size() && plan.size() == 1) {
          res = gradients(params, train.features, all_targets, cfg.loss, cfg.reg, masks);
        } else {
          res = gradients(params, row_slice(train.features, rows), select_targets(all_targets, rows), cfg.loss,
                          cfg.reg, masks);
        }
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1) + ": " + e.what());
      }
      if (!std::isfinite(res.objective)) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                             std::to_string(rep.steps + 1) + ": objective is " + format_double(res.objective));
      }
      update_running_stats(params, res.trace);
      adam_step(opt, params, res.grads);
      ++rep.steps;
      obj_sum += res.objective;
      loss_sum += res.data_loss;
    }
    const bool last = epoch + 1 == epochs;
    if ((epoch + 1) % cfg.eval_every == 0 || last) {
      const auto n = static_cast<double>(plan.size());
      rep.curves.push_back({epoch + 1, obj_sum / n, loss_sum / n, evaluate(params, data.test, cfg.loss).metric});
    }
    if (target && !rep.steps_to_target && meets(evaluate(params, train, cfg.loss).metric, *target, task))
      rep.steps_to_target = rep.steps;
  }
  if (cfg.batch_norm && cfg.recalibrate_bn) recalibrate_batch_norm(params, train.features);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void finish_report(const ExperimentConfig& cfg, const PreparedData& data, const NetworkParams& params,
                   const NeuronMaskSet& masks, RunReport& rep) {
  const Evaluation tr = evaluate(params, data.train, cfg.loss);
  const Evaluation te = evaluate(params, data.test, cfg.loss);
  rep.train_metric = tr.metric;
  rep.test_metric = te.metric;
  rep.train_loss = tr.loss;
  rep.test_loss = te.loss;
  rep.reg_value = reg_value(params, cfg.reg, masks);
  rep.objective = tr.loss + cfg.reg.lambda * rep.reg_value;
  rep.active_neurons = active_neurons(params, cfg.prune_threshold);
  rep.sparsity = sparsity(params, cfg.sparsity_threshold).ratios;
  rep.regularized_params = regularized_param_count(params, cfg.reg, masks);
  for (double v : {rep.train_metric, rep.test_metric, rep.reg_value, rep.objective})
    if (!std::isfinite(v)) throw NumericalError("non-finite final metric");

  if (cfg.prune) {
    try {
      const PruneResult pr = prune_network(params, cfg.prune_threshold);
      rep.pruned_widths = pr.compact.widths();
      rep.pruned_test_metric = evaluate(pr.compact, data.test, cfg.loss).metric;
    } catch (const DegenerateNetworkError& e) {
      std::clog << "slimnet: warning: " << e.what() << "; pruned network not reported\n";
    }
  }

  const Dataset& train = data.train;
  if (train.task == TaskKind::regression && train.dim() == 1) {
    Matrix x = train.features;
    if (train.feature_stats) x = destandardize(x, *train.feature_stats);
    Matrix y_true = target_column(train);
    Matrix y_pred = predict(params, train.features, Mode::eval);
    if (data.target_stats) {
      y_true = destandardize(y_true, *data.target_stats);
      y_pred = destandardize(y_pred, *data.target_stats);
    }
    for (std::size_t i = 0; i < train.size(); ++i) rep.fit.push_back({x(i, 0), y_true(i, 0), y_pred(i, 0)});
  }
}

RunReport blank_report(const ExperimentConfig& cfg, const PreparedData& data) {
  RunReport rep;
  rep.label = reg_label(cfg.reg.kind);
  rep.dataset = cfg.data.id;
  rep.metric = data.train.task == TaskKind::regression ? "loss" : "accuracy";
  rep.seed = cfg.seed;
  rep.zero_ratio = is_partial(cfg.reg.kind) ? cfg.zero_ratio.str() : "0";
  ExperimentConfig resolved = cfg;
  resolved.data.split_seed = split_seed(cfg);
  resolved.mask_seed = mask_seed(cfg);
  rep.config = config_to_json(resolved);
  return rep;
}

NeuronMaskSet masks_for(const ExperimentConfig& cfg, const NetworkParams& params) {
  if (!is_partial(cfg.reg.kind)) return {};
  return build_masks(params, cfg.zero_ratio, cfg.mask_placement, mask_seed(cfg));
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  const DataConfig& d = cfg.data;
  PreparedData out;
  switch (d.source) {
    case DataSource::toy:
      out.train = gen_toy(d.toy_points);
      out.test = gen_toy_midpoints(d.toy_points);
      break;
    case DataSource::table: {
      TableOptions opts;
      opts.path = d.path;
      opts.target_column = d.target_column;
      opts.delimiter = d.delimiter;
      opts.header = d.header;
      opts.task = d.task;
      const Dataset all = load_table(opts);
      auto [train, test] = split(all, {d.train_fraction, split_seed(cfg), d.stratified});
      out.train = std::move(train);
      out.test = std::move(test);
      break;
    }
    case DataSource::idx:
      out.train = load_idx(d.train_images, d.train_labels);
      out.test = load_idx(d.test_images, d.test_labels);
      break;
  }
  out.train = truncate(std::move(out.train), d.max_train);
  out.test = truncate(std::move(out.test), d.max_test);
  if (out.train.size() == 0 || out.test.size() == 0) throw DataError("empty train or test split");
  if (out.train.task != d.task) throw ConfigError("dataset task does not match the configured task");
  if (d.task == TaskKind::classification) {
    const std::size_t classes = std::max(out.train.n_classes, out.test.n_classes);
    out.train.n_classes = out.test.n_classes = classes;
  }

  if (d.normalize_features) {
    const FeatureStats stats = fit_standardizer(out.train.features);
    out.train.features = standardize(out.train.features, stats);
    out.test.features = standardize(out.test.features, stats);
    out.train.feature_stats = out.test.feature_stats = stats;
  }
  if (d.normalize_targets && d.task == TaskKind::regression) {
    const FeatureStats stats = fit_standardizer(target_column(out.train));
    set_targets(out.train, standardize(target_column(out.train), stats));
    set_targets(out.test, standardize(target_column(out.test), stats));
    out.target_stats = stats;
  }
  return out;
}

TrainedRun train_run(const ExperimentConfig& cfg) {
  validate(cfg);
  const PreparedData data = prepare_data(cfg);
  if (const auto problem = fit_problem(cfg.widths, data); !problem.empty()) throw ConfigError(problem);

  auto specs = mlp_specs(cfg.widths, cfg.batch_norm);
  for (std::size_t l = 0; l + 1 < specs.size(); ++l) specs[l].activation = cfg.hidden_activation;
  TrainedRun run;
  run.params = init_network(specs, init_seed(cfg), cfg.init_std);
  run.masks = masks_for(cfg, run.params);
  run.optimizer = AdamState::fresh(run.params, cfg.adam);
  run.report = blank_report(cfg, data);
  train_epochs(cfg, data, run.params, run.optimizer, run.masks, cfg.epochs, std::nullopt, run.report);
  finish_report(cfg, data, run.params, run.masks, run.report);
  return run;
}

RunReport run_experiment(const ExperimentConfig& cfg) { return train_run(cfg).report; }

std::uint64_t repeat_seed(std::uint64_t base, std::size_t repeat) { return mix_seed(base, 1000 + repeat); }

namespace {

RegKind partial_counterpart(RegKind k) {
  switch (k) {
    case RegKind::group_lasso:
    case RegKind::partial_gl: return RegKind::partial_gl;
    case RegKind::sparse_group_lasso:
    case RegKind::partial_sgl: return RegKind::partial_sgl;
    default: throw ConfigError("a zero-ratio sweep needs gl, sgl, pgl or psgl, not " + short_name(k));
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

SweepResult sweep_beta(const ExperimentConfig& cfg, const std::vector<Rational>& ratios, std::size_t repeats) {
  if (ratios.empty()) throw ConfigError("sweep needs at least one zero ratio");
  if (repeats == 0) throw ConfigError("sweep needs at least one repeat");
  for (const auto& r : ratios)
    if (r.num > r.den) throw ConfigError("zero ratio " + r.str() + " exceeds 1");
  const RegKind kind = partial_counterpart(cfg.reg.kind);
  SweepResult out;
  for (const auto& ratio : ratios) {
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      ExperimentConfig c = cfg;
      c.reg.kind = kind;
      c.zero_ratio = ratio;
      c.seed = repeat_seed(cfg.seed, rep);
      c.repeats = 1;
      RunReport r = run_experiment(c);
      r.repeat = rep;
      out.runs.push_back(std::move(r));
    }
  }
  out.summary = summarize(out.runs);
  return out;
}

std::vector<SweepSummary> summarize(const std::vector<RunReport>& runs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunReport*>> groups;
  for (const auto& r : runs) {
    if (!groups.count(r.zero_ratio)) order.push_back(r.zero_ratio);
    groups[r.zero_ratio].push_back(&r);
  }
  std::vector<SweepSummary> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> test, train, time;
    for (const auto* r : g) {
      test.push_back(r->test_metric);
      train.push_back(r->train_metric);
      time.push_back(r->wall_time_s);
    }
    out.push_back({key, g.size(), median(test), mean(test), median(train), mean(train), mean(time),
                   g.front()->regularized_params});
  }
  return out;
}

ContinueResult continue_training(const Checkpoint& ckpt, const ExperimentConfig& cfg_in,
                                 const ContinueOptions& opts) {
  ExperimentConfig cfg = cfg_in;
  validate(cfg);
  const PreparedData data = prepare_data(cfg);
  cfg.widths = ckpt.params.widths();
  if (const auto problem = fit_problem(cfg.widths, data); !problem.empty()) throw ShapeError(problem);
  validate(cfg);

  std::optional<double> target = opts.target_metric;
  if (!target && !ckpt.metadata.empty()) {
    try {
      const auto meta = nlohmann::json::parse(ckpt.metadata);
      if (meta.contains("report")) target = meta.at("report").at("train_metric").get<double>();
    } catch (const nlohmann::json::exception&) {
      throw DataError("checkpoint metadata is not a valid run record");
    }
  }

  ContinueResult out;
  TrainedRun& run = out.resumed;
  run.params = ckpt.params;
  run.masks = masks_for(cfg, run.params);
  run.optimizer = AdamState::fresh(run.params, cfg.adam);
  run.report = blank_report(cfg, data);
  run.report.initial_train_metric = evaluate(run.params, data.train, cfg.loss).metric;
  run.report.initial_test_metric = evaluate(run.params, data.test, cfg.loss).metric;
  train_epochs(cfg, data, run.params, run.optimizer, run.masks, opts.epochs, target, run.report);
  finish_report(cfg, data, run.params, run.masks, run.report);

  if (opts.compare_random_init) {
    NetworkParams fresh = init_network(ckpt.params.specs(), opts.random_init_seed, cfg.init_std);
    const NeuronMaskSet masks = masks_for(cfg, fresh);
    AdamState opt = AdamState::fresh(fresh, cfg.adam);
    RunReport rep = blank_report(cfg, data);
    rep.label += "-random-init";
    rep.initial_train_metric = evaluate(fresh, data.train, cfg.loss).metric;
    rep.initial_test_metric = evaluate(fresh, data.test, cfg.loss).metric;
    train_epochs(cfg, data, fresh, opt, masks, opts.epochs, target, rep);
    finish_report(cfg, data, fresh, masks, rep);
    out.random_init = std::move(rep);
  }
  return out;
}

std::string checkpoint_metadata(const RunReport& report) {
  return nlohmann::json{{"config", report.config}, {"report", report_to_json(report)}}.dump();
}

ExperimentConfig config_from_checkpoint(const Checkpoint& ckpt) {
  try {
    const auto meta = nlohmann::json::parse(ckpt.metadata);
    return config_from_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint carries no usable config: ") + e.what());
  }
}

}  // namespace slimnet
