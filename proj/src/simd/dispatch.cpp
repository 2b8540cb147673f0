#include <cstdlib>
#include <string_view>

#include "levyap/simd.hpp"

namespace levyap::simd {

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

#ifndef LEVYAP_HAVE_AVX2_KERNELS
namespace detail {
const KernelTable* avx2_table_if_built() { return nullptr; }
}  // namespace detail
#endif

const KernelTable* avx2_kernels() {
#if defined(LEVYAP_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? detail::avx2_table_if_built() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("LEVYAP_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return scalar_kernels();
  if (const KernelTable* avx2 = avx2_kernels()) return *avx2;
  return scalar_kernels();
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& table = select();
  return table;
}

Isa active_isa() { return kernels().isa; }

}  // namespace levyap::simd
