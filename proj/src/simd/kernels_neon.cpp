#include "imm/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace imm::simd::detail {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void mul_add_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(z + i, vfmaq_f64(vld1q_f64(z + i), vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) z[i] += x[i] * y[i];
}

void gemm_strided_neon(std::size_t m, std::size_t k, std::size_t n, const double* a,
                       std::size_t a_row, std::size_t a_col, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* ai = a + i * a_row;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      float64x2_t c0 = vld1q_f64(crow + j), c1 = vld1q_f64(crow + j + 2);
      float64x2_t c2 = vld1q_f64(crow + j + 4), c3 = vld1q_f64(crow + j + 6);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ai[p * a_col];
        if (av == 0.0) continue;
        const float64x2_t s = vdupq_n_f64(av);
        const double* bp = b + p * n + j;
        c0 = vfmaq_f64(c0, s, vld1q_f64(bp));
        c1 = vfmaq_f64(c1, s, vld1q_f64(bp + 2));
        c2 = vfmaq_f64(c2, s, vld1q_f64(bp + 4));
        c3 = vfmaq_f64(c3, s, vld1q_f64(bp + 6));
      }
      vst1q_f64(crow + j, c0);
      vst1q_f64(crow + j + 2, c1);
      vst1q_f64(crow + j + 4, c2);
      vst1q_f64(crow + j + 6, c3);
    }
    for (; j < n; ++j) {
      double acc = crow[j];
      for (std::size_t p = 0; p < k; ++p) acc += ai[p * a_col] * b[p * n + j];
      crow[j] = acc;
    }
  }
}

void gemm_nt_neon(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                  double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_neon(a + i * k, b + j * k, k);
  }
}

constexpr KernelTable kNeon{Isa::Neon, dot_neon, axpy_neon, mul_add_neon, gemm_strided_neon,
                            gemm_nt_neon};

}  // namespace

const KernelTable* neon_table() noexcept { return &kNeon; }

}  // namespace imm::simd::detail

#else

namespace imm::simd::detail {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace imm::simd::detail

#endif
