#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "slimnet/errors.hpp"
#include "slimnet/tensor/rng.hpp"

using namespace slimnet;

TEST_SUITE("rng") {

TEST_CASE("normal_draws with std 0 returns the mean") {
  RngStream rng(1);
  for (double v : normal_draws(rng, 100, 2.5, 0.0)) CHECK(v == 2.5);
}

TEST_CASE("normal_draws is deterministic per seed") {
  RngStream a(42), b(42), c(43);
  const auto va = normal_draws(a, 1000, 0.0, 1.0);
  CHECK(va == normal_draws(b, 1000, 0.0, 1.0));
  CHECK(va != normal_draws(c, 1000, 0.0, 1.0));
}

TEST_CASE("normal_draws sample variance over 1e6 draws") {
  RngStream rng(7);
  const auto v = normal_draws(rng, 1000000, 0.0, 1.0);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = ss / (v.size() - 1);
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
  CHECK(std::abs(mean) < 0.005);
}

TEST_CASE("normal_draws rejects a negative std") {
  RngStream rng(1);
  CHECK_THROWS_AS(normal_draws(rng, 3, 0.0, -1.0), ParameterError);
}

TEST_CASE("uniform draws lie in [0, 1)") {
  RngStream rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_index(7) < 7);
}

TEST_CASE("first outputs match mt19937_64") {
  // mt19937_64 is fully specified by the standard, so raw outputs are portable.
  RngStream rng(5489);
  std::mt19937_64 ref(5489);
  for (int i = 0; i < 10; ++i) CHECK(rng.next_u64() == ref());
}

TEST_CASE("shuffled_indices is a permutation") {
  RngStream rng(9);
  auto p = shuffled_indices(rng, 50);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == i);
}

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
  CHECK(mix_seed(1, 1) != mix_seed(2, 1));
  CHECK(mix_seed(1, 1) == mix_seed(1, 1));
  RngStream a(11);
  CHECK(a.fork(3).next_u64() == RngStream(mix_seed(11, 3)).next_u64());
}

}  // TEST_SUITE
