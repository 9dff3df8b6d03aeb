#include "imm/simd/kernels.hpp"

namespace imm::simd::detail {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mul_add_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] += x[i] * y[i];
}

// Zero entries of A are skipped; dropout leaves many of them.
void gemm_strided_scalar(std::size_t m, std::size_t k, std::size_t n, const double* a,
                         std::size_t a_row, std::size_t a_col, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * a_row + p * a_col];
      if (av != 0.0) axpy_scalar(av, b + p * n, crow, n);
    }
  }
}

void gemm_nt_scalar(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                    double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_scalar(a + i * k, b + j * k, k);
  }
}

constexpr KernelTable kScalar{Isa::Scalar, dot_scalar, axpy_scalar, mul_add_scalar,
                              gemm_strided_scalar, gemm_nt_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace imm::simd::detail
