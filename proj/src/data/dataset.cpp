#include "slimnet/data/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/rng.hpp"

namespace slimnet {

std::string to_string(TaskKind t) { return t == TaskKind::regression ? "regression" : "classification"; }

Targets Dataset::targets_for(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rows = all;
  }
  Targets t;
  if (task == TaskKind::regression) {
    t.values = Matrix(rows.size(), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) t.values(i, 0) = targets.at(rows[i]);
  } else {
    t.labels.reserve(rows.size());
    for (std::size_t r : rows) t.labels.push_back(static_cast<std::size_t>(targets.at(r)));
  }
  return t;
}

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(targets.size());
  for (double v : targets) out.push_back(static_cast<std::size_t>(v));
  return out;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.features = row_slice(ds.features, rows);
  out.targets.reserve(rows.size());
  for (std::size_t r : rows) out.targets.push_back(ds.targets.at(r));
  out.task = ds.task;
  out.n_classes = ds.n_classes;
  out.feature_stats = ds.feature_stats;
  return out;
}

Dataset gen_toy(std::size_t n) {
  if (n < 2) throw ParameterError("gen_toy needs at least 2 points");
  Dataset ds;
  ds.features = Matrix(n, 1);
  ds.targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    ds.features(i, 0) = x;
    ds.targets[i] = -(x * x);
  }
  return ds;
}

Dataset gen_toy_midpoints(std::size_t n) {
  if (n < 2) throw ParameterError("gen_toy_midpoints needs at least 2 grid points");
  Dataset ds;
  ds.features = Matrix(n - 1, 1);
  ds.targets.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x = -1.0 + (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n - 1);
    ds.features(i, 0) = x;
    ds.targets[i] = -(x * x);
  }
  return ds;
}

namespace {

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  if (delim == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      cells.push_back(line.substr(i, j - i));
      i = j;
    }
  } else {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == delim) {
        std::string_view cell = line.substr(start, i - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
        cells.push_back(cell);
        start = i + 1;
      }
    }
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t line_no, const std::filesystem::path& path) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
    throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
  }
  return v;
}

}  // namespace

Dataset load_table(const TableOptions& opts) {
  std::ifstream in(opts.path);
  if (!in) throw DataError("cannot open " + opts.path.string());
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (opts.header && line_no == 1) continue;
    const auto cells = split_line(line, opts.delimiter);
    if (rows == 0) {
      cols = cells.size();
      if (cols < 2) throw DataError(opts.path.string() + ":" + std::to_string(line_no) + ": need at least 2 columns");
    } else if (cells.size() != cols) {
      throw DataError(opts.path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " columns, found " + std::to_string(cells.size()));
    }
    for (auto c : cells) values.push_back(parse_cell(c, line_no, opts.path));
    ++rows;
  }
  if (rows == 0) throw DataError(opts.path.string() + ": no data rows");

  const long tc = opts.target_column < 0 ? static_cast<long>(cols) + opts.target_column : opts.target_column;
  if (tc < 0 || tc >= static_cast<long>(cols)) throw ConfigError("target column out of range");
  const auto target_col = static_cast<std::size_t>(tc);

  Dataset ds;
  ds.task = opts.task;
  ds.features = Matrix(rows, cols - 1);
  ds.targets.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t out_c = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      if (c == target_col)
        ds.targets[r] = v;
      else
        ds.features(r, out_c++) = v;
    }
  }
  if (opts.task == TaskKind::classification) {
    std::map<double, std::size_t> index;
    for (double v : ds.targets) index.emplace(v, 0);
    std::size_t next = 0;
    for (auto& [value, idx] : index) idx = next++;
    for (double& v : ds.targets) v = static_cast<double>(index.at(v));
    ds.n_classes = index.size();
  }
  if (opts.normalize) {
    ds.feature_stats = fit_standardizer(ds.features);
    ds.features = standardize(ds.features, *ds.feature_stats);
  }
  return ds;
}

IdxArray read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int got = 0;
  while ((got = gzread(f, buf, sizeof(buf))) > 0) bytes.insert(bytes.end(), buf, buf + got);
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw DataError("read error in " + path.string());

  auto be32 = [&](std::size_t off) {
    return (std::uint32_t{bytes[off]} << 24) | (std::uint32_t{bytes[off + 1]} << 16) |
           (std::uint32_t{bytes[off + 2]} << 8) | std::uint32_t{bytes[off + 3]};
  };
  if (bytes.size() < 4) throw DataError(path.string() + ": truncated IDX header");
  const std::uint32_t magic = be32(0);
  if (magic != expected_magic) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    throw DataError(path.string() + ": bad IDX magic number " + hex);
  }
  IdxArray arr;
  arr.type_code = bytes[2];
  const std::size_t ndims = bytes[3];
  if (bytes.size() < 4 + 4 * ndims) throw DataError(path.string() + ": truncated IDX header");
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    arr.dims.push_back(be32(4 + 4 * d));
    count *= arr.dims.back();
  }
  const std::size_t offset = 4 + 4 * ndims;
  if (bytes.size() - offset != count) {
    throw DataError(path.string() + ": IDX payload has " + std::to_string(bytes.size() - offset) +
                    " bytes, header implies " + std::to_string(count));
  }
  arr.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return arr;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = read_idx(images, kIdxImagesMagic);
  const IdxArray lab = read_idx(labels, kIdxLabelsMagic);
  if (img.dims[0] != lab.dims[0]) {
    throw DataError("image count " + std::to_string(img.dims[0]) + " does not match label count " +
                    std::to_string(lab.dims[0]));
  }
  const std::size_t n = img.dims[0];
  const std::size_t d = std::size_t{img.dims[1]} * img.dims[2];
  Dataset ds;
  ds.task = TaskKind::classification;
  ds.features = Matrix(n, d);
  for (std::size_t i = 0; i < n * d; ++i) ds.features.data()[i] = static_cast<double>(img.data[i]) / 255.0;
  ds.targets.resize(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.targets[i] = lab.data[i];
    max_label = std::max<std::size_t>(max_label, lab.data[i]);
  }
  ds.n_classes = std::max<std::size_t>(10, max_label + 1);
  return ds;
}

FeatureStats fit_standardizer(const Matrix& m) {
  FeatureStats s;
  const double n = static_cast<double>(m.rows());
  s.mean = column_sums(m);
  for (auto& v : s.mean) v /= n;
  s.std.assign(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double d = m(r, c) - s.mean[c];
      s.std[c] += d * d;
    }
  for (auto& v : s.std) v = std::max(std::sqrt(v / n), kStdFloor);
  return s;
}

Matrix standardize(const Matrix& m, const FeatureStats& stats) {
  if (stats.mean.size() != m.cols()) throw ShapeError("standardize: stats do not match columns");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - stats.mean[c]) / stats.std[c];
  return out;
}

Matrix destandardize(const Matrix& m, const FeatureStats& stats) {
  if (stats.mean.size() != m.cols()) throw ShapeError("destandardize: stats do not match columns");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) * stats.std[c] + stats.mean[c];
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
  RngStream rng(spec.seed);
  std::vector<std::size_t> train_rows, test_rows;

  if (spec.stratified && ds.task == TaskKind::classification) {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(ds.targets[i])].push_back(i);
    // floor of each class share first, then the largest remainders get one more
    std::vector<std::pair<double, std::size_t>> remainders;
    std::map<std::size_t, std::size_t> take;
    std::size_t assigned = 0;
    for (auto& [cls, rows] : by_class) {
      const double exact = spec.train_fraction * static_cast<double>(rows.size());
      take[cls] = static_cast<std::size_t>(std::floor(exact));
      assigned += take[cls];
      remainders.emplace_back(exact - std::floor(exact), cls);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n_train && i < remainders.size(); ++i, ++assigned) ++take[remainders[i].second];
    for (auto& [cls, rows] : by_class) {
      const auto order = shuffled_indices(rng, rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) (i < take[cls] ? train_rows : test_rows).push_back(rows[order[i]]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    const auto train_order = shuffled_indices(rng, train_rows.size());
    std::vector<std::size_t> shuffled(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) shuffled[i] = train_rows[train_order[i]];
    train_rows = std::move(shuffled);
  } else {
    const auto order = shuffled_indices(rng, n);
    train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  }
  return {subset(ds, train_rows), subset(ds, test_rows)};
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle) {
  if (n == 0) throw ParameterError("batches: empty dataset");
  std::vector<std::size_t> order(n);
  if (shuffle) {
    RngStream rng(seed);
    order = shuffled_indices(rng, n);
  } else {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
  }
  const std::size_t bs = batch_size == 0 ? n : batch_size;
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += bs)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + bs)));
  return out;
}

}  // namespace slimnet
