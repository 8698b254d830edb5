#pragma once

// Checkpoint file, format version 1. All integers and doubles little-endian;
// doubles are raw IEEE-754 binary64 so a save/load round trip is bit-exact.
//
//   bytes 0..7   magic "SLIMNET\0"
//   u32          format version (1)
//   u32          layer count L
//   per layer:
//     u64 in_dim, u64 out_dim
//     u8 activation (0 relu, 1 identity), u8 batch_norm, u8 has_bias, u8 reserved
//     f64[in_dim * out_dim]   weights, row-major
//     f64[out_dim]            bias            (has_bias)
//     f64[out_dim] x 4        scale, shift, running mean, running variance  (batch_norm)
//   u8           has optimizer state
//     u64 step; f64 lr, beta1, beta2, eps
//     per layer, per trainable array in file order: f64[] first moment, f64[] second moment
//   u64          metadata length n, then n bytes of UTF-8 (JSON by convention)

#include <filesystem>
#include <optional>
#include <string>

#include "slimnet/model/network.hpp"
#include "slimnet/optim/adam.hpp"

namespace slimnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  NetworkParams params;
  std::optional<AdamState> optimizer;
  std::string metadata;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws DataError on truncation, bad magic or an unknown version.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace slimnet
