#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace slimnet {

// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded pseudo-random stream backed by mt19937_64. Uniform and normal draws
// are computed here from raw 64-bit outputs (std distributions are
// implementation-defined), so a seed yields the same sequence on every
// conforming platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Independent stream for a named purpose (layer init, batching, masks...).
  RngStream fork(std::uint64_t stream) const { return RngStream(mix_seed(seed_, stream)); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// n draws from Normal(mean, std^2). Throws ParameterError for std < 0.
std::vector<double> normal_draws(RngStream& rng, std::size_t n, double mean, double std);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(RngStream& rng, std::size_t n);

}  // namespace slimnet
