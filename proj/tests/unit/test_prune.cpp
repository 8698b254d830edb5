#include <doctest.h>

#include "slimnet/errors.hpp"
#include "slimnet/prune/prune.hpp"
#include "test_support.hpp"

using namespace slimnet;

namespace {

void zero_row(NetworkParams& p, std::size_t layer, std::size_t row) {
  for (auto& v : p.layers[layer].weights.row(row)) v = 0.0;
}

void zero_column(NetworkParams& p, std::size_t layer, std::size_t col) {
  Matrix& w = p.layers[layer].weights;
  for (std::size_t r = 0; r < w.rows(); ++r) w(r, col) = 0.0;
}

}  // namespace

TEST_SUITE("prune") {

TEST_CASE("sparsity ratios") {
  Layer l;
  l.activation = Activation::identity;
  l.weights = Matrix{{0.0005, 0.5}, {0.002, 1.2}};
  l.bias = {0, 0};
  NetworkParams p{{l}};
  CHECK(sparsity(p, 1e-3).ratios == std::vector<double>{0.25});
  CHECK(sparsity(p, 0.0).ratios == std::vector<double>{0.0});
  p.layers[0].weights = Matrix(2, 2);
  CHECK(sparsity(p, 1e-3).ratios == std::vector<double>{1.0});
  CHECK_THROWS_AS(sparsity(p, -1.0), ParameterError);
}

TEST_CASE("active neuron counts") {
  NetworkParams p = testing::random_network({5, 4, 3}, false, 1);
  CHECK(active_neurons(p, 1e-3) == std::vector<std::size_t>{5, 4, 3});
  zero_row(p, 0, 1);
  zero_row(p, 0, 3);
  CHECK(active_neurons(p, 1e-3)[0] == 3);
  CHECK(active_neurons(p, 0.0)[0] == 5);
}

TEST_CASE("exactly-zero outgoing rows are removed without changing outputs") {
  NetworkParams p = testing::random_network({4, 6, 5, 2}, true, 2);
  zero_row(p, 1, 2);
  zero_row(p, 1, 4);
  zero_row(p, 2, 0);
  RngStream rng(3);
  const Matrix probe = testing::random_matrix(rng, 20, 4);
  const PruneResult r = prune_network(p, 1e-3);
  CHECK(r.compact.widths() == std::vector<std::size_t>{4, 4, 4, 2});
  CHECK(r.report.layers[1].kept == std::vector<std::size_t>{0, 1, 3, 5});
  CHECK(r.report.layers[2].pruned == 1);
  CHECK(compare_outputs(p, r.compact, probe) == 0.0);
}

TEST_CASE("constant neuron is absorbed into the next bias") {
  NetworkParams p = testing::random_network({3, 4, 2}, false, 4);
  zero_column(p, 0, 1);
  p.layers[0].bias[1] = 0.5;
  const Vector b_before = p.layers[1].bias;
  const auto w_row = p.layers[1].weights.row(1);
  const Vector w(w_row.begin(), w_row.end());
  RngStream rng(5);
  const Matrix probe = testing::random_matrix(rng, 30, 3);
  const PruneResult r = prune_network(p, 1e-3);
  CHECK(r.compact.widths() == std::vector<std::size_t>{3, 3, 2});
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(r.compact.layers[1].bias[j] == doctest::Approx(b_before[j] + 0.5 * w[j]).epsilon(1e-15));
    CHECK(r.report.layers[1].absorbed[j] == doctest::Approx(0.5 * w[j]).epsilon(1e-15));
  }
  CHECK(compare_outputs(p, r.compact, probe) <= 1e-12);
}

TEST_CASE("constant neuron ahead of a batch-norm layer shifts its running mean") {
  NetworkParams p = testing::random_network({3, 5, 4, 2}, true, 6);
  zero_column(p, 0, 3);
  RngStream rng(7);
  const Matrix probe = testing::random_matrix(rng, 30, 3);
  const PruneResult r = prune_network(p, 1e-3);
  CHECK(r.compact.widths()[1] == 4);
  CHECK(compare_outputs(p, r.compact, probe) <= 1e-12);
}

TEST_CASE("dead inputs are zeroed and keep the input width") {
  NetworkParams p = testing::random_network({4, 5, 2}, false, 8);
  zero_row(p, 0, 2);
  const PruneResult r = prune_network(p, 1e-3);
  CHECK(r.compact.input_dim() == 4);
  CHECK(r.report.layers[0].kept == std::vector<std::size_t>{0, 1, 3});
  CHECK(r.report.layers[0].pruned == 1);
}

TEST_CASE("pruning is idempotent") {
  NetworkParams p = testing::random_network({4, 6, 5, 2}, true, 9);
  zero_row(p, 1, 0);
  zero_column(p, 1, 4);
  const PruneResult once = prune_network(p, 1e-3);
  const PruneResult twice = prune_network(once.compact, 1e-3);
  CHECK(twice.compact == once.compact);
  for (const auto& l : twice.report.layers) CHECK(l.pruned == 0);
}

TEST_CASE("near-zero groups change outputs by a bounded amount") {
  NetworkParams p = testing::random_network({4, 6, 2}, false, 10);
  for (auto& v : p.layers[1].weights.row(3)) v *= 1e-7;
  RngStream rng(11);
  const Matrix probe = testing::random_matrix(rng, 20, 4);
  const PruneResult r = prune_network(p, 1e-3);
  CHECK(r.compact.widths()[1] == 5);
  CHECK(compare_outputs(p, r.compact, probe) <= 1e-5);
}

TEST_CASE("threshold 0 leaves a dense network unchanged") {
  const NetworkParams p = testing::random_network({4, 6, 5, 2}, true, 12);
  const PruneResult r = prune_network(p, 0.0);
  CHECK(r.compact == p);
  NetworkParams q = p;
  zero_row(q, 1, 1);
  CHECK(prune_network(q, 0.0).compact.widths()[1] == 5);
}

TEST_CASE("emptying a hidden layer is degenerate") {
  NetworkParams p = testing::random_network({3, 2, 2}, false, 13);
  p.layers[1].weights = Matrix(2, 2);
  CHECK_THROWS_AS(prune_network(p, 1e-3), DegenerateNetworkError);
}

TEST_CASE("compare_outputs") {
  const NetworkParams p = testing::random_network({3, 5, 2}, true, 14);
  RngStream rng(15);
  const Matrix probe = testing::random_matrix(rng, 10, 3);
  CHECK(compare_outputs(p, p, probe) == 0.0);
  const std::vector<std::size_t> perm{3, 1, 4, 0, 2};
  CHECK(compare_outputs(p, permute_hidden(p, 1, perm), probe) <= 1e-12);
  CHECK_THROWS_AS(compare_outputs(p, testing::random_network({4, 5, 2}, true, 14), probe), ShapeError);
}

}  // TEST_SUITE
