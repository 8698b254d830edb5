#pragma once

// Report rendering. Every format keeps a stable column order:
//
//   table-text  Regularization, Training <metric>, Test <metric>, Neurons,
//               Sparsity, Time(s); sweep summaries follow as a second table
//   csv         one row per run, all RunReport fields; lists as "[a;b;c]",
//               curves, fit and config as embedded JSON
//   json        array of run objects
//   plot-data   whitespace-separated series blocks, each introduced by a
//               "# series ..." line: one "sweep" block with one point per
//               run, then one "fit" block per run that carries fit data
//
// Doubles are written as shortest round-trip decimals, so json and csv parse
// back to bit-identical values.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "slimnet/experiment/runner.hpp"

namespace slimnet {

enum class ReportFormat { table_text, csv, json, plot_data };

std::string to_string(ReportFormat f);
// Accepts table-text, table, csv, json, plot-data. Throws ConfigError.
ReportFormat report_format_from_string(const std::string& s);

nlohmann::json report_to_json(const RunReport& r);
// Throws DataError on missing or ill-typed fields.
RunReport report_from_json(const nlohmann::json& j);

// Throws ParameterError for an empty report list.
std::string render_reports(const std::vector<RunReport>& reports, ReportFormat format,
                           const std::vector<SweepSummary>& summary = {});

// Writes render_reports to `path`. Throws DataError when it cannot be written.
void emit_report(const std::vector<RunReport>& reports, ReportFormat format, const std::filesystem::path& path,
                 const std::vector<SweepSummary>& summary = {});

// Inverse of the json and csv renderings. Throws DataError.
std::vector<RunReport> parse_reports_json(const std::string& text);
std::vector<RunReport> parse_reports_csv(const std::string& text);

// Reads a json or csv report file, chosen by extension.
std::vector<RunReport> load_reports(const std::filesystem::path& path);

// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace slimnet
