#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "slimnet/data/dataset.hpp"
#include "slimnet/errors.hpp"
#include "test_support.hpp"

using namespace slimnet;

namespace {

struct OracleSample {
  std::size_t label, byte_sum, nonzero, first_nonzero;
};

struct MnistOracle {
  std::vector<OracleSample> samples;
  std::map<std::size_t, std::vector<std::uint8_t>> rows;  // image 0 pixel rows
};

MnistOracle read_mnist_oracle() {
  MnistOracle o;
  std::istringstream in(testing::read_file(testing::fixture("mnist100-oracle.txt")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (line.rfind("row", 0) == 0) {
      std::string tag, hex;
      ls >> tag >> hex;
      std::vector<std::uint8_t> bytes;
      for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        bytes.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
      o.rows[std::stoul(tag.substr(3))] = bytes;
    } else {
      std::size_t idx;
      OracleSample s;
      ls >> idx >> s.label >> s.byte_sum >> s.nonzero >> s.first_nonzero;
      o.samples.push_back(s);
    }
  }
  return o;
}

std::string with_byte(std::string bytes, std::size_t pos, char value) {
  bytes[pos] = value;
  return bytes;
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("toy data") {
  const Dataset d = gen_toy(40);
  CHECK(d.size() == 40);
  CHECK(d.features(0, 0) == -1.0);
  CHECK(d.targets[0] == -1.0);
  CHECK(d.features(39, 0) == 1.0);
  const Dataset two = gen_toy(2);
  CHECK(two.features == Matrix{{-1}, {1}});
  CHECK(two.targets == Vector{-1, -1});
  CHECK_THROWS_AS(gen_toy(1), ParameterError);

  const Dataset mid = gen_toy_midpoints(40);
  CHECK(mid.size() == 39);
  const double spacing = 2.0 / 39.0;
  bool near_peak = false;
  for (std::size_t i = 0; i < mid.size(); ++i) {
    CHECK(mid.targets[i] == -mid.features(i, 0) * mid.features(i, 0));
    if (std::abs(mid.features(i, 0)) < spacing && mid.targets[i] >= -spacing * spacing) near_peak = true;
  }
  CHECK(near_peak);
}

TEST_CASE("miniature IDX fixtures match the byte-level oracle") {
  const MnistOracle o = read_mnist_oracle();
  REQUIRE(o.samples.size() == 100);
  const Dataset d = load_idx(testing::fixture("mnist100-images-idx3-ubyte"), testing::fixture("mnist100-labels-idx1-ubyte"));
  REQUIRE(d.size() == 100);
  CHECK(d.dim() == 784);
  CHECK(d.task == TaskKind::classification);
  CHECK(d.n_classes == 10);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& s = o.samples[i];
    CHECK(d.targets[i] == static_cast<double>(s.label));
    std::size_t sum = 0, nonzero = 0, first = 784;
    for (std::size_t j = 0; j < 784; ++j) {
      const double v = d.features(i, j) * 255.0;
      const auto b = static_cast<std::size_t>(std::lround(v));
      CHECK(std::abs(v - b) < 1e-9);
      sum += b;
      if (b != 0) {
        ++nonzero;
        first = std::min(first, j);
      }
    }
    CHECK(sum == s.byte_sum);
    CHECK(nonzero == s.nonzero);
    CHECK(first == s.first_nonzero);
  }
  REQUIRE(o.rows.size() == 5);
  for (const auto& [r, bytes] : o.rows) {
    REQUIRE(bytes.size() == 28);
    for (std::size_t c = 0; c < 28; ++c) CHECK(d.features(0, r * 28 + c) == bytes[c] / 255.0);
  }
}

TEST_CASE("IDX headers") {
  const IdxArray a = read_idx(testing::fixture("mnist100-images-idx3-ubyte"), kIdxImagesMagic);
  CHECK(a.type_code == 0x08);
  CHECK(a.dims == std::vector<std::uint32_t>{100, 28, 28});
  CHECK(a.data.size() == 78400);
}

TEST_CASE("malformed IDX files are rejected") {
  const auto dir = testing::scratch_dir("idx");
  const std::string images = testing::read_file(testing::fixture("mnist100-images-idx3-ubyte"));
  const std::string labels = testing::read_file(testing::fixture("mnist100-labels-idx1-ubyte"));
  const auto good_images = testing::fixture("mnist100-images-idx3-ubyte");
  const auto good_labels = testing::fixture("mnist100-labels-idx1-ubyte");

  SUBCASE("bad magic") {
    write_file(dir / "img", with_byte(images, 3, 0x01));
    CHECK_THROWS_AS(load_idx(dir / "img", good_labels), DataError);
    write_file(dir / "lab", with_byte(labels, 2, 0x09));
    CHECK_THROWS_AS(load_idx(good_images, dir / "lab"), DataError);
  }
  SUBCASE("swapped files") {
    CHECK_THROWS_AS(load_idx(good_labels, good_images), DataError);
  }
  SUBCASE("truncated payload") {
    write_file(dir / "img", images.substr(0, images.size() - 10));
    CHECK_THROWS_AS(load_idx(dir / "img", good_labels), DataError);
  }
  SUBCASE("count mismatch") {
    std::string short_labels = with_byte(labels, 7, 99);
    short_labels.pop_back();
    write_file(dir / "lab", short_labels);
    CHECK_THROWS_AS(load_idx(good_images, dir / "lab"), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_idx(dir / "none", good_labels), DataError);
  }
}

TEST_CASE("all-zero image rows scale to zero") {
  const Dataset d = load_idx(testing::fixture("mnist100-images-idx3-ubyte"), testing::fixture("mnist100-labels-idx1-ubyte"));
  for (std::size_t j = 0; j < 28; ++j) CHECK(d.features(0, j) == 0.0);
}

TEST_CASE("Boston fixture") {
  TableOptions opts;
  opts.path = testing::fixture("boston100.csv");
  const Dataset d = load_table(opts);
  CHECK(d.size() == 100);
  CHECK(d.dim() == 13);
  const Vector first{0.00632, 18, 2.31, 0, 0.538, 6.575, 65.2, 4.09, 1, 296, 15.3, 396.9, 4.98};
  for (std::size_t j = 0; j < 13; ++j) CHECK(d.features(0, j) == first[j]);
  CHECK(d.targets[0] == 24.0);
  CHECK(d.targets[1] == 21.6);
  CHECK(load_table(opts) == d);
}

TEST_CASE("SDD fixture") {
  TableOptions opts;
  opts.path = testing::fixture("sdd100.txt");
  opts.delimiter = ' ';
  opts.task = TaskKind::classification;
  const Dataset d = load_table(opts);
  CHECK(d.size() == 100);
  CHECK(d.dim() == 48);
  CHECK(d.n_classes == 11);
  CHECK(d.features(0, 0) == -1.32755e-03);
  CHECK(d.features(0, 1) == -1.06621e-05);
  CHECK(d.features(0, 47) == 1.15755e-01);
  CHECK(d.targets[0] == 0.0);
  const auto labels = d.labels();
  CHECK(*std::max_element(labels.begin(), labels.end()) == 10);
}

TEST_CASE("table errors") {
  const auto dir = testing::scratch_dir("table");
  TableOptions opts;
  opts.path = dir / "missing.csv";
  CHECK_THROWS_AS(load_table(opts), DataError);

  opts.path = dir / "ragged.csv";
  write_file(opts.path, "1,2,3\n4,5,6\n7,8\n");
  try {
    load_table(opts);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }

  opts.path = dir / "text.csv";
  write_file(opts.path, "1,2,3\n4,abc,6\n");
  CHECK_THROWS_AS(load_table(opts), DataError);

  opts.path = dir / "header.csv";
  write_file(opts.path, "a,b,y\n1,2,3\n4,5,6\n");
  opts.header = true;
  opts.target_column = 0;
  const Dataset d = load_table(opts);
  CHECK(d.features == Matrix{{2, 3}, {5, 6}});
  CHECK(d.targets == Vector{1, 4});
}

TEST_CASE("normalization") {
  TableOptions opts;
  opts.path = testing::fixture("boston100.csv");
  const Dataset raw = load_table(opts);
  const FeatureStats st = fit_standardizer(raw.features);
  const Matrix z = standardize(raw.features, st);
  const Matrix back = destandardize(z, st);
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t j = 0; j < raw.dim(); ++j) {
      const double a = raw.features(i, j), b = back(i, j);
      CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
    }
  const Vector mean = column_sums(z);
  for (double m : mean) CHECK(std::abs(m / raw.size()) < 1e-12);

  Matrix constant(4, 2, 3.0);
  constant(1, 1) = 5.0;
  const FeatureStats cs = fit_standardizer(constant);
  CHECK(cs.std[0] == kStdFloor);
  const Matrix zc = standardize(constant, cs);
  for (std::size_t i = 0; i < 4; ++i) CHECK(zc(i, 0) == 0.0);
}

TEST_CASE("splits") {
  SUBCASE("506 rows at 0.8") {
    Dataset d;
    d.features = Matrix(506, 2);
    d.targets.assign(506, 0.0);
    for (std::size_t i = 0; i < 506; ++i) d.features(i, 0) = static_cast<double>(i);
    const auto [tr, te] = split(d, SplitSpec{0.8, 3, false});
    CHECK(tr.size() == 404);
    CHECK(te.size() == 102);
    std::set<double> seen;
    for (std::size_t i = 0; i < tr.size(); ++i) seen.insert(tr.features(i, 0));
    for (std::size_t i = 0; i < te.size(); ++i) seen.insert(te.features(i, 0));
    CHECK(seen.size() == 506);
    const auto [tr2, te2] = split(d, SplitSpec{0.8, 3, false});
    CHECK(tr2 == tr);
    CHECK(te2 == te);
    const auto [tr3, te3] = split(d, SplitSpec{0.8, 4, false});
    CHECK_FALSE(tr3 == tr);
  }
  SUBCASE("stratified on a balanced two-class set") {
    Dataset d;
    d.task = TaskKind::classification;
    d.n_classes = 2;
    d.features = Matrix(50, 1);
    for (std::size_t i = 0; i < 50; ++i) d.targets.push_back(static_cast<double>(i % 2));
    const auto [tr, te] = split(d, SplitSpec{0.7, 5, true});
    CHECK(tr.size() == 35);
    for (const Dataset* part : {&tr, &te}) {
      const auto labels = part->labels();
      const auto ones = static_cast<long>(std::count(labels.begin(), labels.end(), std::size_t{1}));
      const auto zeros = static_cast<long>(labels.size()) - ones;
      CHECK(std::abs(ones - zeros) <= 1);
    }
  }
}

TEST_CASE("batches") {
  SUBCASE("coverage without duplicates") {
    const auto b = batches(1003, 100, 7, true);
    CHECK(b.size() == 11);
    std::vector<std::size_t> all;
    for (const auto& s : b) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    CHECK(all.size() == 1003);
  }
  SUBCASE("SDD-sized train split in batches of 500") {
    const std::size_t train = 58508 * 8 / 10;
    CHECK(batches(train, 500, 1, true).size() == (train + 499) / 500);
  }
  SUBCASE("batch larger than the set") {
    CHECK(batches(10, 50, 1, true).size() == 1);
    CHECK(batches(10, 0, 1, true).size() == 1);
  }
  SUBCASE("no shuffle keeps identity order") {
    const auto b = batches(7, 3, 1, false);
    CHECK(b == std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4, 5}, {6}});
  }
  SUBCASE("empty set") {
    CHECK_THROWS_AS(batches(0, 3, 1, true), ParameterError);
  }
}

TEST_CASE("bundled datasets") {
  const auto dir = testing::data_dir();
  TableOptions opts;
  opts.path = dir / "boston" / "housing.csv";
  const Dataset boston = load_table(opts);
  CHECK(boston.size() == 506);
  CHECK(boston.dim() == 13);

  const Dataset train = load_idx(dir / "mnist" / "train-images-idx3-ubyte.gz", dir / "mnist" / "train-labels-idx1-ubyte.gz");
  CHECK(train.size() == 10000);
  CHECK(train.dim() == 784);
  const Dataset test = load_idx(dir / "mnist" / "t10k-images-idx3-ubyte.gz", dir / "mnist" / "t10k-labels-idx1-ubyte.gz");
  CHECK(test.size() == 2000);

  // The fixture holds the first 100 training samples.
  const Dataset mini = load_idx(testing::fixture("mnist100-images-idx3-ubyte"), testing::fixture("mnist100-labels-idx1-ubyte"));
  std::vector<std::size_t> first(100);
  for (std::size_t i = 0; i < 100; ++i) first[i] = i;
  CHECK(subset(train, first) == mini);
}

}  // TEST_SUITE
