#include "slimnet/experiment/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slimnet/errors.hpp"

namespace slimnet {

using nlohmann::json;

std::string to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::table_text: return "table-text";
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::plot_data: return "plot-data";
  }
  return "table-text";
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "table-text" || s == "table") return ReportFormat::table_text;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  if (s == "plot-data" || s == "plot") return ReportFormat::plot_data;
  throw ConfigError("unknown report format '" + s + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json curves_json(const std::vector<CurvePoint>& curves) {
  json a = json::array();
  for (const auto& c : curves) a.push_back({c.epoch, c.train_objective, c.train_loss, c.test_metric});
  return a;
}

json fit_json(const std::vector<FitPoint>& fit) {
  json a = json::array();
  for (const auto& f : fit) a.push_back({f.x, f.y_true, f.y_pred});
  return a;
}

std::vector<CurvePoint> curves_from(const json& a) {
  std::vector<CurvePoint> out;
  for (const auto& c : a) out.push_back({c.at(0).get<std::size_t>(), c.at(1).get<double>(), c.at(2).get<double>(),
                                         c.at(3).get<double>()});
  return out;
}

std::vector<FitPoint> fit_from(const json& a) {
  std::vector<FitPoint> out;
  for (const auto& f : a) out.push_back({f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()});
  return out;
}

template <typename T>
std::optional<T> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

json report_to_json(const RunReport& r) {
  return {
      {"label", r.label},
      {"dataset", r.dataset},
      {"metric", r.metric},
      {"seed", r.seed},
      {"repeat", r.repeat},
      {"zero_ratio", r.zero_ratio},
      {"train_metric", r.train_metric},
      {"test_metric", r.test_metric},
      {"train_loss", r.train_loss},
      {"test_loss", r.test_loss},
      {"reg_value", r.reg_value},
      {"objective", r.objective},
      {"active_neurons", r.active_neurons},
      {"sparsity", r.sparsity},
      {"regularized_params", r.regularized_params},
      {"pruned_widths", r.pruned_widths},
      {"pruned_test_metric", opt(r.pruned_test_metric)},
      {"wall_time_s", r.wall_time_s},
      {"steps", r.steps},
      {"steps_to_target", opt(r.steps_to_target)},
      {"initial_train_metric", opt(r.initial_train_metric)},
      {"initial_test_metric", opt(r.initial_test_metric)},
      {"curves", curves_json(r.curves)},
      {"fit", fit_json(r.fit)},
      {"config", r.config},
  };
}

RunReport report_from_json(const json& j) {
  try {
    RunReport r;
    r.label = j.at("label").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.repeat = j.at("repeat").get<std::size_t>();
    r.zero_ratio = j.at("zero_ratio").get<std::string>();
    r.train_metric = j.at("train_metric").get<double>();
    r.test_metric = j.at("test_metric").get<double>();
    r.train_loss = j.at("train_loss").get<double>();
    r.test_loss = j.at("test_loss").get<double>();
    r.reg_value = j.at("reg_value").get<double>();
    r.objective = j.at("objective").get<double>();
    r.active_neurons = j.at("active_neurons").get<std::vector<std::size_t>>();
    r.sparsity = j.at("sparsity").get<std::vector<double>>();
    r.regularized_params = j.at("regularized_params").get<std::size_t>();
    r.pruned_widths = j.at("pruned_widths").get<std::vector<std::size_t>>();
    r.pruned_test_metric = opt_from<double>(j, "pruned_test_metric");
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.steps = j.at("steps").get<std::size_t>();
    r.steps_to_target = opt_from<std::size_t>(j, "steps_to_target");
    r.initial_train_metric = opt_from<double>(j, "initial_train_metric");
    r.initial_test_metric = opt_from<double>(j, "initial_test_metric");
    r.curves = curves_from(j.at("curves"));
    r.fit = fit_from(j.at("fit"));
    r.config = j.at("config");
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed run report: ") + e.what());
  }
}

namespace {

template <typename T>
std::string list_cell(const std::vector<T>& v, int digits = -1) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    if constexpr (std::is_floating_point_v<T>) {
      if (digits < 0) {
        s += format_double(v[i]);
      } else {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.*f", digits, v[i]);
        s += buf;
      }
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s + "]";
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename T>
std::string opt_cell(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_floating_point_v<T>)
    return format_double(*v);
  else
    return std::to_string(*v);
}

const std::vector<std::string> kCsvColumns = {
    "label", "dataset", "metric", "seed", "repeat", "zero_ratio", "train_metric", "test_metric", "train_loss",
    "test_loss", "reg_value", "objective", "active_neurons", "sparsity", "regularized_params", "pruned_widths",
    "pruned_test_metric", "wall_time_s", "steps", "steps_to_target", "initial_train_metric", "initial_test_metric",
    "curves", "fit", "config"};

std::string render_csv(const std::vector<RunReport>& reports) {
  std::string out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) out += (i ? "," : "") + kCsvColumns[i];
  out += '\n';
  for (const auto& r : reports) {
    const std::vector<std::string> cells = {
        csv_quote(r.label),
        csv_quote(r.dataset),
        csv_quote(r.metric),
        std::to_string(r.seed),
        std::to_string(r.repeat),
        csv_quote(r.zero_ratio),
        format_double(r.train_metric),
        format_double(r.test_metric),
        format_double(r.train_loss),
        format_double(r.test_loss),
        format_double(r.reg_value),
        format_double(r.objective),
        list_cell(r.active_neurons),
        list_cell(r.sparsity),
        std::to_string(r.regularized_params),
        list_cell(r.pruned_widths),
        opt_cell(r.pruned_test_metric),
        format_double(r.wall_time_s),
        std::to_string(r.steps),
        opt_cell(r.steps_to_target),
        opt_cell(r.initial_train_metric),
        opt_cell(r.initial_test_metric),
        csv_quote(curves_json(r.curves).dump()),
        csv_quote(fit_json(r.fit).dump()),
        csv_quote(r.config.dump()),
    };
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  }
  return out;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string render_table(const std::vector<RunReport>& reports, const std::vector<SweepSummary>& summary) {
  const std::string metric = reports.front().metric;
  std::vector<std::vector<std::string>> rows = {
      {"Regularization", "Training " + metric, "Test " + metric, "Neurons", "Sparsity", "Time(s)"}};
  for (const auto& r : reports) {
    rows.push_back({r.label, sci(r.train_metric), sci(r.test_metric), list_cell(r.active_neurons),
                    list_cell(r.sparsity, 4), sci(r.wall_time_s)});
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "  " : "") + pad(row[c], width[c]);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  if (!summary.empty()) {
    out += "\nZero ratio  Runs  Median test  Mean test  Median train  Mean train  Mean time(s)  Regularized\n";
    for (const auto& s : summary) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%-10s  %4zu  %11.6g  %9.6g  %12.6g  %10.6g  %12.4g  %11zu\n",
                    s.zero_ratio.c_str(), s.runs, s.median_test_metric, s.mean_test_metric, s.median_train_metric,
                    s.mean_train_metric, s.mean_wall_time_s, s.regularized_params);
      out += buf;
    }
  }
  return out;
}

std::string render_plot_data(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  out << "# series sweep dataset=" << reports.front().dataset << " metric=" << reports.front().metric << '\n';
  out << "# zero_ratio ratio repeat seed label test_metric\n";
  for (const auto& r : reports) {
    double ratio = 0.0;
    try {
      ratio = Rational::parse(r.zero_ratio.empty() ? "0" : r.zero_ratio).value();
    } catch (const Error&) {
      ratio = std::nan("");
    }
    out << r.zero_ratio << ' ' << format_double(ratio) << ' ' << r.repeat << ' ' << r.seed << ' ' << r.label << ' '
        << format_double(r.test_metric) << '\n';
  }
  for (const auto& r : reports) {
    if (r.fit.empty()) continue;
    out << "\n# series fit dataset=" << r.dataset << " label=" << r.label << " seed=" << r.seed << '\n';
    out << "# x y_true y_pred\n";
    for (const auto& f : r.fit)
      out << format_double(f.x) << ' ' << format_double(f.y_true) << ' ' << format_double(f.y_pred) << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_reports(const std::vector<RunReport>& reports, ReportFormat format,
                           const std::vector<SweepSummary>& summary) {
  if (reports.empty()) throw ParameterError("no reports to render");
  switch (format) {
    case ReportFormat::table_text: return render_table(reports, summary);
    case ReportFormat::csv: return render_csv(reports);
    case ReportFormat::json: {
      json a = json::array();
      for (const auto& r : reports) a.push_back(report_to_json(r));
      return a.dump(2) + "\n";
    }
    case ReportFormat::plot_data: return render_plot_data(reports);
  }
  return {};
}

void emit_report(const std::vector<RunReport>& reports, ReportFormat format, const std::filesystem::path& path,
                 const std::vector<SweepSummary>& summary) {
  const std::string text = render_reports(reports, format, summary);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write report " + path.string());
  f << text;
  if (!f) throw DataError("failed writing report " + path.string());
}

std::vector<RunReport> parse_reports_json(const std::string& text) {
  json a;
  try {
    a = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("report json: ") + e.what());
  }
  if (!a.is_array()) throw DataError("report json must be an array of runs");
  std::vector<RunReport> out;
  for (const auto& j : a) out.push_back(report_from_json(j));
  return out;
}

namespace {

std::vector<std::vector<std::string>> csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      records.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw DataError("report csv: unterminated quoted cell");
  if (any) {
    row.push_back(std::move(cell));
    records.push_back(std::move(row));
  }
  return records;
}

json number_cell(const std::string& s, bool integer) {
  if (s.empty()) return nullptr;
  if (integer) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("report csv: bad integer '" + s + "'");
    return v;
  }
  if (s == "nan" || s == "-nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("report csv: bad number '" + s + "'");
  return v;
}

json list_from_cell(const std::string& s, bool integer) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') throw DataError("report csv: bad list '" + s + "'");
  json a = json::array();
  const std::string body = s.substr(1, s.size() - 2);
  if (body.empty()) return a;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = body.find(';', start);
    a.push_back(number_cell(body.substr(start, end - start), integer));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return a;
}

}  // namespace

std::vector<RunReport> parse_reports_csv(const std::string& text) {
  const auto records = csv_records(text);
  if (records.empty() || records.front() != kCsvColumns) throw DataError("report csv: unexpected header");
  std::vector<RunReport> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& c = records[i];
    if (c.size() != kCsvColumns.size()) throw DataError("report csv: row " + std::to_string(i + 1) + " is ragged");
    try {
      json j = {
          {"label", c[0]},
          {"dataset", c[1]},
          {"metric", c[2]},
          {"seed", number_cell(c[3], true)},
          {"repeat", number_cell(c[4], true)},
          {"zero_ratio", c[5]},
          {"train_metric", number_cell(c[6], false)},
          {"test_metric", number_cell(c[7], false)},
          {"train_loss", number_cell(c[8], false)},
          {"test_loss", number_cell(c[9], false)},
          {"reg_value", number_cell(c[10], false)},
          {"objective", number_cell(c[11], false)},
          {"active_neurons", list_from_cell(c[12], true)},
          {"sparsity", list_from_cell(c[13], false)},
          {"regularized_params", number_cell(c[14], true)},
          {"pruned_widths", list_from_cell(c[15], true)},
          {"pruned_test_metric", number_cell(c[16], false)},
          {"wall_time_s", number_cell(c[17], false)},
          {"steps", number_cell(c[18], true)},
          {"steps_to_target", number_cell(c[19], true)},
          {"initial_train_metric", number_cell(c[20], false)},
          {"initial_test_metric", number_cell(c[21], false)},
          {"curves", json::parse(c[22])},
          {"fit", json::parse(c[23])},
          {"config", json::parse(c[24])},
      };
      out.push_back(report_from_json(j));
    } catch (const json::exception& e) {
      throw DataError("report csv: row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RunReport> load_reports(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open report " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  if (path.extension() == ".csv") return parse_reports_csv(ss.str());
  return parse_reports_json(ss.str());
}

}  // namespace slimnet
