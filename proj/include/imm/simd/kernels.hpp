#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the autodiff ops. Each kernel
// has a portable scalar reference and, where the host supports it, an AVX2
// (x86-64) or NEON (AArch64) variant. The variant is chosen once at startup
// from CPU feature detection and can be pinned with IMM_SIMD=scalar|avx2|neon.

namespace imm::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  /// Returns sum_i x[i] * y[i].
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// z[i] += x[i] * y[i]
  void (*mul_add)(const double* x, const double* y, double* z, std::size_t n);
  /// C[m x n] += A * B where A(i, p) = a[i * a_row + p * a_col] and B is
  /// k x n row-major. Covers both A * B and A^T * B.
  void (*gemm_strided)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                       std::size_t a_row, std::size_t a_col, const double* b, double* c);
  /// C[m x n] += A * B^T, A is m x k, B is n x k.
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
                  double* c);
};

std::string_view isa_name(Isa isa) noexcept;

/// True if the variant was compiled in and the running CPU supports it.
bool isa_supported(Isa isa) noexcept;

/// Kernel table of a specific variant. Throws imm::ParameterError when the
/// variant is unavailable on this host.
const KernelTable& kernels(Isa isa);

/// Currently active table.
const KernelTable& kernels() noexcept;

/// Pins the active variant (tests and benchmarks).
void set_active_isa(Isa isa);

/// Best variant for this host, honouring IMM_SIMD when set.
Isa detect_isa() noexcept;

// Row-major GEMM helpers that accumulate into C. Dimensions follow the
// logical (post-transpose) product: C is m x n, the inner dimension is k.

/// C += A * B, A is m x k, B is k x n.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c);
/// C += A * B^T, A is m x k, B is n x k.
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c);
/// C += A^T * B, A is k x m, B is k x n.
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c);

namespace detail {
const KernelTable& scalar_table() noexcept;
const KernelTable* avx2_table() noexcept;  // nullptr when not compiled in
const KernelTable* neon_table() noexcept;  // nullptr when not compiled in
}  // namespace detail

}  // namespace imm::simd
