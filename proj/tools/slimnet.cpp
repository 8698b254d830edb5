// slimnet command-line harness.
//
//   slimnet train     --preset toy --reg pgl --zero-ratio 1/5 --out runs/toy
//   slimnet sweep     --preset mnist --ratios 0,1/8,1/4,1/2,3/4 --repeats 3 --out runs/sweep
//   slimnet prune     --checkpoint runs/toy/model.ckpt --out runs/toy-pruned
//   slimnet continue  --checkpoint runs/toy-pruned/model.ckpt --epochs 500 --out runs/toy-cont
//   slimnet gradcheck --preset boston --reg sgl --widths 13,6,5,1
//   slimnet report    --in runs/sweep/report.json --format table-text
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
// failure (divergence or a failed gradient check).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "slimnet/errors.hpp"
#include "slimnet/experiment/report.hpp"
#include "slimnet/experiment/runner.hpp"
#include "slimnet/tensor/kernels.hpp"
#include "slimnet/tensor/rng.hpp"

#ifndef SLIMNET_DEFAULT_DATA_DIR
#define SLIMNET_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace slimnet;

namespace {

struct ConfigFlags {
  std::string preset;
  std::string config_file;
  std::string data_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> repeats;
  std::string zero_ratio;
  std::string reg;
  std::optional<double> lambda;
  std::optional<double> alpha;
  std::string widths;
  bool no_batch_norm = false;
  bool prune = false;
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--preset", f.preset, "Table preset")
      ->check(CLI::IsMember({"toy", "boston", "sdd", "mnist", "fashion"}));
  app->add_option("--config", f.config_file, "JSON config file (keys as written into reports)");
  app->add_option("--data-dir", f.data_dir, "Root of the dataset files");
  app->add_option("--seed", f.seed, "Run seed");
  app->add_option("--epochs", f.epochs, "Training epochs");
  app->add_option("--batch-size", f.batch_size, "Mini-batch size, 0 for full batch");
  app->add_option("--repeats", f.repeats, "Runs per setting");
  app->add_option("--zero-ratio", f.zero_ratio, "Fraction of unregularized groups per layer, e.g. 1/8");
  app->add_option("--reg", f.reg, "Regularizer")
      ->check(CLI::IsMember({"gl", "sgl", "wgl", "wsgl", "pgl", "psgl", "l1", "l2", "none"}));
  app->add_option("--lambda", f.lambda, "Regularization factor");
  app->add_option("--alpha", f.alpha, "L1 share of the sparse regularizers");
  app->add_option("--widths", f.widths, "Layer widths, e.g. 13,40,30,1");
  app->add_flag("--no-batch-norm", f.no_batch_norm, "Disable batch normalization");
  app->add_flag("--prune", f.prune, "Prune after training and report the compact network");
}

fs::path data_dir(const ConfigFlags& f) {
  if (!f.data_dir.empty()) return f.data_dir;
  if (const char* env = std::getenv("SLIMNET_DATA_DIR")) return env;
  return SLIMNET_DEFAULT_DATA_DIR;
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoul(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad width '" + item + "' in --widths");
    }
  }
  return out;
}

std::vector<Rational> parse_ratios(const std::string& s) {
  std::vector<Rational> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(Rational::parse(item));
    } catch (const Error& e) {
      throw ConfigError("bad ratio '" + item + "': " + e.what());
    }
  }
  return out;
}

ExperimentConfig resolve(const ConfigFlags& f, std::optional<ExperimentConfig> base = std::nullopt) {
  if (!f.preset.empty() && !f.config_file.empty()) throw ConfigError("--preset and --config are exclusive");
  ExperimentConfig cfg;
  if (base)
    cfg = *base;
  else if (!f.config_file.empty())
    cfg = load_config_file(f.config_file, data_dir(f));
  else if (!f.preset.empty())
    cfg = preset_config(f.preset, data_dir(f));
  else
    throw ConfigError("give --preset or --config");
  if (f.seed) cfg.seed = *f.seed;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.batch_size) cfg.batch_size = *f.batch_size;
  if (f.repeats) cfg.repeats = *f.repeats;
  if (!f.reg.empty()) cfg.reg.kind = reg_kind_from_string(f.reg);
  if (f.lambda) cfg.reg.lambda = *f.lambda;
  if (f.alpha) cfg.reg.alpha = *f.alpha;
  if (!f.zero_ratio.empty()) {
    try {
      cfg.zero_ratio = Rational::parse(f.zero_ratio);
    } catch (const Error& e) {
      throw ConfigError(std::string("--zero-ratio: ") + e.what());
    }
  }
  if (!f.widths.empty()) cfg.widths = parse_widths(f.widths);
  if (f.no_batch_norm) cfg.batch_norm = false;
  if (f.prune) cfg.prune = true;
  validate(cfg);
  return cfg;
}

void log_run(const RunReport& r) {
  std::cerr << r.dataset << ' ' << r.label << " seed=" << r.seed << " ratio=" << r.zero_ratio
            << " train_" << r.metric << '=' << r.train_metric << " test_" << r.metric << '=' << r.test_metric
            << " time=" << r.wall_time_s << "s\n";
}

void write_all(const fs::path& dir, const std::vector<RunReport>& reports, const std::vector<SweepSummary>& summary) {
  emit_report(reports, ReportFormat::json, dir / "report.json", summary);
  emit_report(reports, ReportFormat::csv, dir / "report.csv", summary);
  emit_report(reports, ReportFormat::table_text, dir / "report.txt", summary);
  emit_report(reports, ReportFormat::plot_data, dir / "plot.dat", summary);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

int cmd_train(const ConfigFlags& f, const std::string& out) {
  const ExperimentConfig cfg = resolve(f);
  std::vector<RunReport> reports;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    ExperimentConfig c = cfg;
    if (cfg.repeats > 1) c.seed = repeat_seed(cfg.seed, r);
    TrainedRun run = train_run(c);
    run.report.repeat = r;
    log_run(run.report);
    if (!out.empty()) {
      make_dir(out);
      const std::string name = cfg.repeats > 1 ? "model-" + std::to_string(r) + ".ckpt" : "model.ckpt";
      save_checkpoint(fs::path(out) / name, {run.params, run.optimizer, checkpoint_metadata(run.report)});
    }
    reports.push_back(std::move(run.report));
  }
  const auto summary = cfg.repeats > 1 ? summarize(reports) : std::vector<SweepSummary>{};
  std::cout << render_reports(reports, ReportFormat::table_text, summary);
  if (!out.empty()) write_all(out, reports, summary);
  return 0;
}

int cmd_sweep(const ConfigFlags& f, const std::string& ratios, const std::string& out) {
  const ExperimentConfig cfg = resolve(f);
  const SweepResult res = sweep_beta(cfg, parse_ratios(ratios), cfg.repeats);
  for (const auto& r : res.runs) log_run(r);
  std::cout << render_reports(res.runs, ReportFormat::table_text, res.summary);
  if (!out.empty()) {
    make_dir(out);
    write_all(out, res.runs, res.summary);
  }
  return 0;
}

int cmd_prune(const std::string& ckpt_path, double threshold, const std::string& out, const ConfigFlags& f) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const PruneResult pr = prune_network(ckpt.params, threshold);
  std::cout << "widths";
  for (auto w : ckpt.params.widths()) std::cout << ' ' << w;
  std::cout << " ->";
  for (auto w : pr.compact.widths()) std::cout << ' ' << w;
  std::cout << '\n';
  for (std::size_t h = 0; h < pr.report.layers.size(); ++h)
    std::cout << "layer " << h << ": kept " << pr.report.layers[h].kept.size() << " of "
              << pr.report.layers[h].original_width << '\n';
  if (!ckpt.metadata.empty()) {
    const ExperimentConfig cfg = resolve(f, config_from_checkpoint(ckpt));
    const PreparedData data = prepare_data(cfg);
    std::cout << "max output change on test set: " << compare_outputs(ckpt.params, pr.compact, data.test.features)
              << '\n';
  }
  if (!out.empty()) {
    make_dir(out);
    save_checkpoint(fs::path(out) / "model.ckpt", {pr.compact, std::nullopt, ckpt.metadata});
  }
  return 0;
}

int cmd_continue(const std::string& ckpt_path, const ConfigFlags& f, std::optional<double> target,
                 bool random_init, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  ConfigFlags overrides = f;
  overrides.epochs.reset();
  const ExperimentConfig cfg = resolve(overrides, config_from_checkpoint(ckpt));
  ContinueOptions opts;
  opts.epochs = f.epochs.value_or(0);
  opts.target_metric = target;
  opts.compare_random_init = random_init;
  opts.random_init_seed = mix_seed(cfg.seed, 77);
  ContinueResult res = continue_training(ckpt, cfg, opts);
  std::vector<RunReport> reports = {res.resumed.report};
  if (res.random_init) reports.push_back(*res.random_init);
  for (const auto& r : reports) {
    log_run(r);
    std::cerr << "  steps to target: "
              << (r.steps_to_target ? std::to_string(*r.steps_to_target) : std::string("not reached")) << '\n';
  }
  std::cout << render_reports(reports, ReportFormat::table_text);
  if (!out.empty()) {
    make_dir(out);
    save_checkpoint(fs::path(out) / "model.ckpt",
                    {res.resumed.params, res.resumed.optimizer, checkpoint_metadata(res.resumed.report)});
    write_all(out, reports, {});
  }
  return 0;
}

int cmd_gradcheck(const ConfigFlags& f, std::size_t batch, double h, double tol) {
  const ExperimentConfig cfg = resolve(f);
  const PreparedData data = prepare_data(cfg);
  auto specs = mlp_specs(cfg.widths, cfg.batch_norm);
  const NetworkParams params = init_network(specs, init_seed(cfg), cfg.init_std);
  const NeuronMaskSet masks =
      is_partial(cfg.reg.kind) ? build_masks(params, cfg.zero_ratio, cfg.mask_placement, mask_seed(cfg))
                               : NeuronMaskSet{};
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < std::min(batch, data.train.size()); ++i) rows.push_back(i);
  const Matrix x = row_slice(data.train.features, rows);
  const Targets t = data.train.targets_for(rows);
  const GradCheckResult g = finite_diff_check(params, x, t, cfg.loss, cfg.reg, masks, h);
  std::cout << "checked " << g.checked << " parameters, max relative error " << g.max_rel_error << " at layer "
            << g.worst_layer + 1 << ' ' << g.worst_array << '[' << g.worst_index << "] (analytic " << g.analytic
            << ", numeric " << g.numeric << ")\n";
  return g.max_rel_error <= tol ? 0 : 3;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& format, const std::string& out) {
  std::vector<RunReport> all;
  for (const auto& in : inputs) {
    auto rs = load_reports(in);
    all.insert(all.end(), rs.begin(), rs.end());
  }
  const ReportFormat fmt = report_format_from_string(format);
  if (out.empty())
    std::cout << render_reports(all, fmt);
  else
    emit_report(all, fmt, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slimnet: structured-sparsity training harness"};
  app.require_subcommand(1);

  ConfigFlags train_f, sweep_f, prune_f, cont_f, grad_f;
  std::string train_out, sweep_out, prune_out, cont_out, report_out;

  auto* train = app.add_subcommand("train", "Train one configuration (repeated --repeats times)");
  add_config_flags(train, train_f);
  train->add_option("--out", train_out, "Output directory for reports and checkpoints");

  std::string ratios = "0,1/8,1/4,1/2,3/4";
  auto* sweep = app.add_subcommand("sweep", "Sweep the zero ratio of the partial regularizer");
  add_config_flags(sweep, sweep_f);
  sweep->add_option("--ratios", ratios, "Comma-separated zero ratios");
  sweep->add_option("--out", sweep_out, "Output directory");

  std::string prune_ckpt;
  double threshold = kDefaultPruneThreshold;
  auto* prune = app.add_subcommand("prune", "Remove dead neurons from a checkpoint");
  prune->add_option("--checkpoint", prune_ckpt, "Checkpoint to prune")->required();
  prune->add_option("--threshold", threshold, "Group-norm threshold");
  prune->add_option("--out", prune_out, "Output directory for the pruned checkpoint");

  std::string cont_ckpt;
  std::optional<double> target;
  bool random_init = false;
  auto* cont = app.add_subcommand("continue", "Resume training from a checkpoint with a fresh optimizer");
  cont->add_option("--checkpoint", cont_ckpt, "Checkpoint to resume")->required();
  cont->add_option("--epochs", cont_f.epochs, "Extra epochs");
  cont->add_option("--target", target, "Train metric to reach (default: the checkpoint's)");
  cont->add_flag("--compare-random-init", random_init, "Also train a freshly initialized network of the same widths");
  cont->add_option("--seed", cont_f.seed, "Run seed");
  cont->add_option("--out", cont_out, "Output directory");

  std::size_t gc_batch = 8;
  double gc_h = 1e-5;
  double gc_tol = 1e-5;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  add_config_flags(grad, grad_f);
  grad->add_option("--batch", gc_batch, "Rows of the training set to use");
  grad->add_option("--step", gc_h, "Finite-difference step");
  grad->add_option("--tol", gc_tol, "Largest acceptable relative error");

  std::vector<std::string> report_in;
  std::string report_format = "table-text";
  auto* report = app.add_subcommand("report", "Render saved reports");
  report->add_option("--in", report_in, "report.json or report.csv files")->required();
  report->add_option("--format", report_format, "table-text, csv, json or plot-data");
  report->add_option("--out", report_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::cerr << "slimnet: kernels " << kernels::active().name << '\n';
    if (*train) return cmd_train(train_f, train_out);
    if (*sweep) return cmd_sweep(sweep_f, ratios, sweep_out);
    if (*prune) return cmd_prune(prune_ckpt, threshold, prune_out, prune_f);
    if (*cont) return cmd_continue(cont_ckpt, cont_f, target, random_init, cont_out);
    if (*grad) return cmd_gradcheck(grad_f, gc_batch, gc_h, gc_tol);
    if (*report) return cmd_report(report_in, report_format, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "slimnet: configuration error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "slimnet: data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "slimnet: numerical error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "slimnet: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
