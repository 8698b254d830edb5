#include <cstdlib>
#include <iostream>
#include <string_view>

#include "slimnet/tensor/kernels.hpp"

namespace slimnet::kernels {
namespace {

const KernelTable& select() {
  const char* forced = std::getenv("SLIMNET_SIMD");
  const std::string_view want = forced ? forced : "";
  if (want == "scalar") return scalar_table();
  if (const KernelTable* avx2 = avx2_table()) return *avx2;
  if (want == "avx2") std::clog << "slimnet: AVX2 requested but unavailable, using scalar kernels\n";
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace slimnet::kernels
