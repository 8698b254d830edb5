#include "slimnet/experiment/config.hpp"

#include <fstream>
#include <set>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/rng.hpp"

namespace slimnet {

using nlohmann::json;

std::string to_string(DataSource s) {
  switch (s) {
    case DataSource::toy: return "toy";
    case DataSource::table: return "table";
    case DataSource::idx: return "idx";
  }
  return "toy";
}

DataSource data_source_from_string(const std::string& s) {
  if (s == "toy") return DataSource::toy;
  if (s == "table") return DataSource::table;
  if (s == "idx") return DataSource::idx;
  throw ConfigError("unknown data source '" + s + "'");
}

namespace {

RegularizerSpec group_lasso_spec(double lambda) {
  RegularizerSpec r;
  r.kind = RegKind::group_lasso;
  r.lambda = lambda;
  r.alpha = 0.1;
  return r;
}

ExperimentConfig idx_preset(const std::string& id, const std::filesystem::path& dir, Rational ratio) {
  ExperimentConfig c;
  c.data.id = id;
  c.data.source = DataSource::idx;
  c.data.task = TaskKind::classification;
  c.data.train_images = dir / "train-images-idx3-ubyte.gz";
  c.data.train_labels = dir / "train-labels-idx1-ubyte.gz";
  c.data.test_images = dir / "t10k-images-idx3-ubyte.gz";
  c.data.test_labels = dir / "t10k-labels-idx1-ubyte.gz";
  c.widths = {784, 400, 300, 100, 10};
  c.loss = LossKind::softmax_cross_entropy;
  c.reg = group_lasso_spec(1e-4);
  c.zero_ratio = ratio;
  c.epochs = 10;
  c.batch_size = 400;
  return c;
}

}  // namespace

ExperimentConfig preset_config(const std::string& name, const std::filesystem::path& data_dir) {
  ExperimentConfig c;
  if (name == "toy") {
    c.data.id = "toy";
    c.data.source = DataSource::toy;
    c.data.toy_points = 40;
    c.widths = {1, 50, 50, 1};
    c.reg = group_lasso_spec(1e-3);
    c.zero_ratio = Rational{1, 5};
    c.epochs = 10000;
    c.eval_every = 100;
  } else if (name == "boston") {
    c.data.id = "boston";
    c.data.source = DataSource::table;
    c.data.path = data_dir / "boston" / "housing.csv";
    c.data.normalize_features = true;
    c.data.normalize_targets = true;
    c.widths = {13, 40, 30, 1};
    c.reg = group_lasso_spec(1e-3);
    c.zero_ratio = Rational{1, 8};
    c.epochs = 700;
    c.eval_every = 10;
  } else if (name == "sdd") {
    c.data.id = "sdd";
    c.data.source = DataSource::table;
    c.data.path = data_dir / "sdd" / "Sensorless_drive_diagnosis.txt";
    c.data.delimiter = ' ';
    c.data.task = TaskKind::classification;
    c.data.normalize_features = true;
    c.data.stratified = true;
    c.widths = {48, 40, 40, 30, 11};
    c.loss = LossKind::softmax_cross_entropy;
    c.reg = group_lasso_spec(1e-4);
    c.zero_ratio = Rational{1, 8};
    c.epochs = 30;
    c.batch_size = 500;
  } else if (name == "mnist") {
    c = idx_preset("mnist", data_dir / "mnist", Rational{1, 8});
  } else if (name == "fashion") {
    c = idx_preset("fashion", data_dir / "fashion", Rational{1, 4});
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected toy, boston, sdd, mnist or fashion)");
  }
  c.preset = name;
  return c;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.widths.size() < 2) throw ConfigError("widths needs at least an input and an output width");
  for (auto w : cfg.widths)
    if (w == 0) throw ConfigError("layer widths must be positive");
  cfg.reg.validate();
  if (cfg.zero_ratio.num > cfg.zero_ratio.den) throw ConfigError("zero_ratio must lie in [0, 1]");
  if (!(cfg.adam.lr > 0.0) || !(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0) ||
      !(cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0) || !(cfg.adam.eps > 0.0))
    throw ConfigError("invalid Adam hyperparameters");
  if (cfg.eval_every == 0) throw ConfigError("eval_every must be >= 1");
  if (cfg.repeats == 0) throw ConfigError("repeats must be >= 1");
  if (!(cfg.sparsity_threshold >= 0.0) || !(cfg.prune_threshold >= 0.0))
    throw ConfigError("thresholds must be >= 0");
  if (!(cfg.data.train_fraction > 0.0 && cfg.data.train_fraction < 1.0))
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  const bool classify = cfg.data.task == TaskKind::classification;
  if (classify != (cfg.loss == LossKind::softmax_cross_entropy))
    throw ConfigError("classification needs softmax_cross_entropy and regression needs mean_squared_error");
  if (cfg.data.source == DataSource::toy && (cfg.widths.front() != 1 || cfg.widths.back() != 1))
    throw ConfigError("the toy dataset needs input and output width 1");
  if (cfg.data.source == DataSource::toy && cfg.data.toy_points < 2) throw ConfigError("toy_points must be >= 2");
}

std::string reg_label(RegKind k) {
  switch (k) {
    case RegKind::none: return "none";
    case RegKind::l1: return "L1";
    case RegKind::l2: return "L2";
    case RegKind::group_lasso: return "GL";
    case RegKind::sparse_group_lasso: return "SGL";
    case RegKind::weighted_gl: return "wGL";
    case RegKind::weighted_sgl: return "wSGL";
    case RegKind::partial_gl: return "iGL";
    case RegKind::partial_sgl: return "iSGL";
  }
  return "none";
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string delimiter_name(char d) { return d == ' ' ? "whitespace" : std::string(1, d); }

char delimiter_from(const std::string& s) {
  if (s == "whitespace") return ' ';
  if (s.size() == 1) return s[0];
  throw ConfigError("delimiter must be a single character or \"whitespace\"");
}

class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void get_opt(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  template <typename T, typename F>
  void get_as(const char* key, T& out, F convert) {
    std::string s;
    if (!j_.contains(key)) {
      seen_.insert(key);
      return;
    }
    get(key, s);
    out = convert(s);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key " + where_ + "." + key);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
  const DataConfig& d = cfg.data;
  json data = {
      {"id", d.id},
      {"source", to_string(d.source)},
      {"toy_points", d.toy_points},
      {"path", d.path.string()},
      {"train_images", d.train_images.string()},
      {"train_labels", d.train_labels.string()},
      {"test_images", d.test_images.string()},
      {"test_labels", d.test_labels.string()},
      {"target_column", d.target_column},
      {"delimiter", delimiter_name(d.delimiter)},
      {"header", d.header},
      {"task", to_string(d.task)},
      {"normalize_features", d.normalize_features},
      {"normalize_targets", d.normalize_targets},
      {"max_train", d.max_train},
      {"max_test", d.max_test},
      {"train_fraction", d.train_fraction},
      {"stratified", d.stratified},
      {"split_seed", opt(d.split_seed)},
  };
  json reg = {
      {"kind", to_string(cfg.reg.kind)},
      {"lambda", cfg.reg.lambda},
      {"alpha", cfg.reg.alpha},
      {"layer_weights", cfg.reg.layer_weights},
      {"group_weights", cfg.reg.group_weights},
      {"smoothing_eps", cfg.reg.smoothing_eps},
      {"zero_ratio", cfg.zero_ratio.str()},
      {"mask_placement", to_string(cfg.mask_placement)},
      {"mask_seed", opt(cfg.mask_seed)},
  };
  json adam = {{"lr", cfg.adam.lr}, {"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"eps", cfg.adam.eps}};
  return {
      {"preset", cfg.preset},
      {"data", data},
      {"widths", cfg.widths},
      {"hidden_activation", to_string(cfg.hidden_activation)},
      {"batch_norm", cfg.batch_norm},
      {"recalibrate_bn", cfg.recalibrate_bn},
      {"loss", to_string(cfg.loss)},
      {"init_std", opt(cfg.init_std)},
      {"regularizer", reg},
      {"adam", adam},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"eval_every", cfg.eval_every},
      {"sparsity_threshold", cfg.sparsity_threshold},
      {"prune_threshold", cfg.prune_threshold},
      {"prune", cfg.prune},
      {"seed", cfg.seed},
      {"repeats", cfg.repeats},
  };
}

ExperimentConfig config_from_json(const json& j, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  Fields top(j, "config");
  top.get("preset", c.preset);
  if (const json* dj = top.child("data")) {
    Fields f(*dj, "data");
    DataConfig& d = c.data;
    auto path = [&](const char* key, std::filesystem::path& out) {
      std::string p = out.string();
      f.get(key, p);
      out = p;
    };
    f.get("id", d.id);
    f.get_as("source", d.source, data_source_from_string);
    f.get("toy_points", d.toy_points);
    path("path", d.path);
    path("train_images", d.train_images);
    path("train_labels", d.train_labels);
    path("test_images", d.test_images);
    path("test_labels", d.test_labels);
    f.get("target_column", d.target_column);
    f.get_as("delimiter", d.delimiter, delimiter_from);
    f.get("header", d.header);
    f.get_as("task", d.task, [](const std::string& s) {
      if (s == "regression") return TaskKind::regression;
      if (s == "classification") return TaskKind::classification;
      throw ConfigError("unknown task '" + s + "'");
    });
    f.get("normalize_features", d.normalize_features);
    f.get("normalize_targets", d.normalize_targets);
    f.get("max_train", d.max_train);
    f.get("max_test", d.max_test);
    f.get("train_fraction", d.train_fraction);
    f.get("stratified", d.stratified);
    f.get_opt("split_seed", d.split_seed);
    f.finish();
  }
  top.get("widths", c.widths);
  top.get_as("hidden_activation", c.hidden_activation, activation_from_string);
  top.get("batch_norm", c.batch_norm);
  top.get("recalibrate_bn", c.recalibrate_bn);
  top.get_as("loss", c.loss, loss_kind_from_string);
  top.get_opt("init_std", c.init_std);
  if (const json* rj = top.child("regularizer")) {
    Fields f(*rj, "regularizer");
    f.get_as("kind", c.reg.kind, reg_kind_from_string);
    f.get("lambda", c.reg.lambda);
    f.get("alpha", c.reg.alpha);
    f.get("layer_weights", c.reg.layer_weights);
    f.get("group_weights", c.reg.group_weights);
    f.get("smoothing_eps", c.reg.smoothing_eps);
    f.get_as("zero_ratio", c.zero_ratio, [](const std::string& s) {
      try {
        return Rational::parse(s);
      } catch (const Error& e) {
        throw ConfigError(std::string("zero_ratio: ") + e.what());
      }
    });
    f.get_as("mask_placement", c.mask_placement, mask_placement_from_string);
    f.get_opt("mask_seed", c.mask_seed);
    f.finish();
  }
  if (const json* aj = top.child("adam")) {
    Fields f(*aj, "adam");
    f.get("lr", c.adam.lr);
    f.get("beta1", c.adam.beta1);
    f.get("beta2", c.adam.beta2);
    f.get("eps", c.adam.eps);
    f.finish();
  }
  top.get("epochs", c.epochs);
  top.get("batch_size", c.batch_size);
  top.get("eval_every", c.eval_every);
  top.get("sparsity_threshold", c.sparsity_threshold);
  top.get("prune_threshold", c.prune_threshold);
  top.get("prune", c.prune);
  top.get("seed", c.seed);
  top.get("repeats", c.repeats);
  top.finish();
  return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, const std::filesystem::path& data_dir) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ExperimentConfig base;
  if (j.is_object() && j.contains("preset") && j.at("preset").is_string() && !j.at("preset").get<std::string>().empty())
    base = preset_config(j.at("preset").get<std::string>(), data_dir);
  return config_from_json(j, base);
}

std::uint64_t split_seed(const ExperimentConfig& cfg) {
  return cfg.data.split_seed ? *cfg.data.split_seed : mix_seed(cfg.seed, 1);
}
std::uint64_t init_seed(const ExperimentConfig& cfg) { return mix_seed(cfg.seed, 2); }
std::uint64_t batch_seed(const ExperimentConfig& cfg, std::size_t epoch) {
  return mix_seed(mix_seed(cfg.seed, 3), epoch);
}
std::uint64_t mask_seed(const ExperimentConfig& cfg) { return cfg.mask_seed ? *cfg.mask_seed : mix_seed(cfg.seed, 4); }

}  // namespace slimnet
