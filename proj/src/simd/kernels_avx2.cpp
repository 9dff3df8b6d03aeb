#include "imm/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

#include <vector>

#define IMM_AVX2_TARGET __attribute__((target("avx2,fma")))

namespace imm::simd::detail {
namespace {

IMM_AVX2_TARGET double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

IMM_AVX2_TARGET void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

IMM_AVX2_TARGET void mul_add_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(z + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                                            _mm256_loadu_pd(z + i)));
  }
  for (; i < n; ++i) z[i] += x[i] * y[i];
}

// One C row: holds a 16-wide strip in registers across the whole inner
// dimension, then 4-wide strips, then a scalar tail. Zero entries of A (the
// dropped units) are skipped.
IMM_AVX2_TARGET void gemm_row_avx2(std::size_t k, std::size_t n, const double* ai,
                                   std::size_t a_col, const double* b, double* crow) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d c0 = _mm256_loadu_pd(crow + j), c1 = _mm256_loadu_pd(crow + j + 4);
    __m256d c2 = _mm256_loadu_pd(crow + j + 8), c3 = _mm256_loadu_pd(crow + j + 12);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p * a_col];
      if (av == 0.0) continue;
      const __m256d s = _mm256_set1_pd(av);
      const double* bp = b + p * n + j;
      c0 = _mm256_fmadd_pd(s, _mm256_loadu_pd(bp), c0);
      c1 = _mm256_fmadd_pd(s, _mm256_loadu_pd(bp + 4), c1);
      c2 = _mm256_fmadd_pd(s, _mm256_loadu_pd(bp + 8), c2);
      c3 = _mm256_fmadd_pd(s, _mm256_loadu_pd(bp + 12), c3);
    }
    _mm256_storeu_pd(crow + j, c0);
    _mm256_storeu_pd(crow + j + 4, c1);
    _mm256_storeu_pd(crow + j + 8, c2);
    _mm256_storeu_pd(crow + j + 12, c3);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0 = _mm256_loadu_pd(crow + j);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p * a_col];
      if (av != 0.0) c0 = _mm256_fmadd_pd(_mm256_set1_pd(av), _mm256_loadu_pd(b + p * n + j), c0);
    }
    _mm256_storeu_pd(crow + j, c0);
  }
  for (; j < n; ++j) {
    double acc = crow[j];
    for (std::size_t p = 0; p < k; ++p) acc += ai[p * a_col] * b[p * n + j];
    crow[j] = acc;
  }
}

// Four C rows at once over 8-wide column strips so each B load feeds four
// FMAs. Every element still accumulates over p in order with one FMA per
// term, so results match gemm_row_avx2 exactly.
IMM_AVX2_TARGET void gemm_rows4_avx2(std::size_t k, std::size_t n, const double* a,
                                     std::size_t a_row, std::size_t a_col, const double* b,
                                     double* c) {
  const double* a0 = a;
  const double* a1 = a + a_row;
  const double* a2 = a + 2 * a_row;
  const double* a3 = a + 3 * a_row;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    double* c0p = c + j;
    double* c1p = c + n + j;
    double* c2p = c + 2 * n + j;
    double* c3p = c + 3 * n + j;
    __m256d r00 = _mm256_loadu_pd(c0p), r01 = _mm256_loadu_pd(c0p + 4);
    __m256d r10 = _mm256_loadu_pd(c1p), r11 = _mm256_loadu_pd(c1p + 4);
    __m256d r20 = _mm256_loadu_pd(c2p), r21 = _mm256_loadu_pd(c2p + 4);
    __m256d r30 = _mm256_loadu_pd(c3p), r31 = _mm256_loadu_pd(c3p + 4);
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n + j;
      const __m256d b0 = _mm256_loadu_pd(bp), b1 = _mm256_loadu_pd(bp + 4);
      const std::size_t off = p * a_col;
      __m256d s = _mm256_set1_pd(a0[off]);
      r00 = _mm256_fmadd_pd(s, b0, r00);
      r01 = _mm256_fmadd_pd(s, b1, r01);
      s = _mm256_set1_pd(a1[off]);
      r10 = _mm256_fmadd_pd(s, b0, r10);
      r11 = _mm256_fmadd_pd(s, b1, r11);
      s = _mm256_set1_pd(a2[off]);
      r20 = _mm256_fmadd_pd(s, b0, r20);
      r21 = _mm256_fmadd_pd(s, b1, r21);
      s = _mm256_set1_pd(a3[off]);
      r30 = _mm256_fmadd_pd(s, b0, r30);
      r31 = _mm256_fmadd_pd(s, b1, r31);
    }
    _mm256_storeu_pd(c0p, r00);
    _mm256_storeu_pd(c0p + 4, r01);
    _mm256_storeu_pd(c1p, r10);
    _mm256_storeu_pd(c1p + 4, r11);
    _mm256_storeu_pd(c2p, r20);
    _mm256_storeu_pd(c2p + 4, r21);
    _mm256_storeu_pd(c3p, r30);
    _mm256_storeu_pd(c3p + 4, r31);
  }
  if (j < n) {
    for (std::size_t r = 0; r < 4; ++r) {
      gemm_row_avx2(k, n - j, a + r * a_row, a_col, b + j, c + r * n + j);
    }
  }
}

IMM_AVX2_TARGET void gemm_strided_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a,
                                       std::size_t a_row, std::size_t a_col, const double* b,
                                       double* c) {
  std::size_t i = 0;
  if (n >= 8) {
    for (; i + 4 <= m; i += 4) gemm_rows4_avx2(k, n, a + i * a_row, a_row, a_col, b, c + i * n);
  }
  for (; i < m; ++i) gemm_row_avx2(k, n, a + i * a_row, a_col, b, c + i * n);
}

IMM_AVX2_TARGET void gemm_nt_avx2(std::size_t m, std::size_t k, std::size_t n, const double* a,
                                  const double* b, double* c) {
  if (m < 4 || n < 8) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_avx2(a + i * k, b + j * k, k);
    }
    return;
  }
  thread_local std::vector<double> bt;
  bt.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_strided_avx2(m, k, n, a, k, 1, bt.data(), c);
}

constexpr KernelTable kAvx2{Isa::Avx2, dot_avx2, axpy_avx2, mul_add_avx2, gemm_strided_avx2,
                            gemm_nt_avx2};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace imm::simd::detail

#else

namespace imm::simd::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace imm::simd::detail

#endif
