// Compiled with -mavx2 only (never -mfma): products and sums stay separate so
// results match the scalar reference bit for bit.

#include "slimnet/tensor/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SLIMNET_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define SLIMNET_HAVE_AVX2_BUILD 0
#endif

#include <cmath>

namespace slimnet::kernels {

#if SLIMNET_HAVE_AVX2_BUILD
namespace {

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kRowsPerTile = 4;

// c[rows i0..i0+3][cols j0..j0+11] += a[.., kb..ke) * b[kb..ke), ..]
inline void tile_4x12(std::size_t k, std::size_t n, std::size_t kb, std::size_t ke,
                      const double* a, const double* b, double* c) {
  __m256d acc[4][3];
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t q = 0; q < 3; ++q) acc[r][q] = _mm256_loadu_pd(c + r * n + 4 * q);
  for (std::size_t p = kb; p < ke; ++p) {
    const double* brow = b + p * n;
    const __m256d b0 = _mm256_loadu_pd(brow);
    const __m256d b1 = _mm256_loadu_pd(brow + 4);
    const __m256d b2 = _mm256_loadu_pd(brow + 8);
    for (std::size_t r = 0; r < 4; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * k + p);
      acc[r][0] = _mm256_add_pd(acc[r][0], _mm256_mul_pd(av, b0));
      acc[r][1] = _mm256_add_pd(acc[r][1], _mm256_mul_pd(av, b1));
      acc[r][2] = _mm256_add_pd(acc[r][2], _mm256_mul_pd(av, b2));
    }
  }
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t q = 0; q < 3; ++q) _mm256_storeu_pd(c + r * n + 4 * q, acc[r][q]);
}

// Single row, `vecs` vectors of four columns (vecs <= 3).
inline void tile_1xv(std::size_t vecs, std::size_t kb, std::size_t ke, std::size_t n,
                     const double* arow, const double* b, double* crow) {
  __m256d acc[3];
  for (std::size_t q = 0; q < vecs; ++q) acc[q] = _mm256_loadu_pd(crow + 4 * q);
  for (std::size_t p = kb; p < ke; ++p) {
    const __m256d av = _mm256_broadcast_sd(arow + p);
    const double* brow = b + p * n;
    for (std::size_t q = 0; q < vecs; ++q)
      acc[q] = _mm256_add_pd(acc[q], _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4 * q)));
  }
  for (std::size_t q = 0; q < vecs; ++q) _mm256_storeu_pd(crow + 4 * q, acc[q]);
}

void gemm_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
               double* c) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  const std::size_t n12 = n - n % 12;
  const std::size_t n4 = n - n % 4;
  const std::size_t m4 = m - m % kRowsPerTile;
  for (std::size_t kb = 0; kb < k; kb += kBlockK) {
    const std::size_t ke = kb + kBlockK < k ? kb + kBlockK : k;
    for (std::size_t j0 = 0; j0 < n12; j0 += 12) {
      std::size_t i0 = 0;
      for (; i0 < m4; i0 += kRowsPerTile) tile_4x12(k, n, kb, ke, a + i0 * k, b + j0, c + i0 * n + j0);
      for (; i0 < m; ++i0) tile_1xv(3, kb, ke, n, a + i0 * k, b + j0, c + i0 * n + j0);
    }
    if (n4 > n12) {
      const std::size_t vecs = (n4 - n12) / 4;
      for (std::size_t i = 0; i < m; ++i) tile_1xv(vecs, kb, ke, n, a + i * k, b + n12, c + i * n + n12);
    }
    if (n > n4) {
      for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = kb; p < ke; ++p) {
          const double aip = a[i * k + p];
          const double* brow = b + p * n;
          for (std::size_t j = n4; j < n; ++j) crow[j] = crow[j] + aip * brow[j];
        }
      }
    }
  }
}

double sum_squares_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total = total + x[i] * x[i];
  return total;
}

void axpy_avx2(std::size_t n, double s, const double* x, double* y) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(sv, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = y[i] + s * x[i];
}

void adam_update_avx2(std::size_t n, const AdamCoeffs& c, const double* g, double* m, double* v,
                      double* theta) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
  const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, gv));
    const __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d m_hat = _mm256_div_pd(mv, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_loadu_pd(theta + i), step));
  }
  for (; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    theta[i] = theta[i] - c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2");
  static const KernelTable table{"avx2", gemm_avx2, sum_squares_avx2, axpy_avx2, adam_update_avx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace slimnet::kernels
