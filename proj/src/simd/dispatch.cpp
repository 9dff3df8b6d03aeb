#include <atomic>
#include <cstdlib>
#include <string>

#include "imm/error.hpp"
#include "imm/simd/kernels.hpp"

namespace imm::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return &detail::scalar_table();
    case Isa::Avx2:
      return cpu_has_avx2() ? detail::avx2_table() : nullptr;
    case Isa::Neon:
      return detail::neon_table();
  }
  return nullptr;
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{table_for(detect_isa())};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept { return table_for(isa) != nullptr; }

Isa detect_isa() noexcept {
  if (const char* env = std::getenv("IMM_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && isa_supported(isa)) return isa;
    }
  }
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

const KernelTable& kernels(Isa isa) {
  const KernelTable* table = table_for(isa);
  if (table == nullptr) {
    throw ParameterError("SIMD variant '" + std::string(isa_name(isa)) + "' unavailable on this host");
  }
  return *table;
}

const KernelTable& kernels() noexcept { return *active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) { active().store(&kernels(isa), std::memory_order_relaxed); }

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  kernels().gemm_strided(m, k, n, a, k, 1, b, c);
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  kernels().gemm_nt(m, k, n, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
             double* c) {
  kernels().gemm_strided(m, k, n, a, 1, m, b, c);
}

}  // namespace imm::simd
