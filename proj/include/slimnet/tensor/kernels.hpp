#pragma once

// Arithmetic inner loops behind Matrix and the optimizer. Every kernel has a
// portable scalar reference; the AVX2 variants perform the same operations in
// the same order (no fused multiply-add, lane-striped reductions) so both
// paths produce bit-identical results. The active table is chosen once at
// startup from CPU features and can be forced with SLIMNET_SIMD=scalar|avx2.

#include <cstddef>

namespace slimnet::kernels {

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  const char* name;

  // c[m x n] = a[m x k] * b[k x n]; c is overwritten. Each c(i, j) is
  // accumulated as ((0 + a(i,0) b(0,j)) + a(i,1) b(1,j)) + ...
  void (*gemm)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c);

  // Sum of squares with four interleaved partial sums s[i % 4] over the
  // largest multiple of four, combined as (s0 + s1) + (s2 + s3), followed by
  // the tail in order.
  double (*sum_squares)(const double* x, std::size_t n);

  // y[i] += s * x[i]
  void (*axpy)(std::size_t n, double s, const double* x, double* y);

  // One bias-corrected Adam step over n coordinates.
  void (*adam_update)(std::size_t n, const AdamCoeffs& c, const double* g, double* m, double* v,
                      double* theta);
};

const KernelTable& scalar_table();

// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_table();

// Table in use for this process.
const KernelTable& active();

}  // namespace slimnet::kernels
