#pragma once

// Data-parallel inner kernels. Every kernel has a scalar reference
// implementation; vector variants are selected once at runtime from the CPU
// features (override with LEVYAP_SIMD=scalar|avx2) and are tested for
// equivalence against the reference.

#include <cstddef>
#include <cstdint>
#include <span>

namespace levyap::simd {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa);

// Inverse-CDF parameters of the truncated symmetric power law on [floor, cutoff):
// |z| = (head - U * span)^(-1/alpha), head = floor^-alpha, span = head - cutoff^-alpha.
struct PowerLawParams {
  double head = 0.0;
  double span = 0.0;
  double neg_inv_alpha = 0.0;
};

struct KernelTable {
  Isa isa;
  // marks[i] = (bit 0 of bits[i] ? -1 : +1) * (head - U_i * span)^(-1/alpha),
  // with U_i = unit52(bits[i]).
  void (*power_law_marks)(const std::uint64_t* bits, double* marks, std::size_t n,
                          const PowerLawParams& params);
  // out[i] = -log(1 - unit52(bits[i])), standard exponential variates.
  void (*exponential_variates)(const std::uint64_t* bits, double* out, std::size_t n);
  // sum_i w[i] * 0.5 * log1p(k_i^2 c^2 (2 - 4 s^2 + k_i^2 c^2)): the symmetrised
  // log-stretch log|(I + kN) e_theta| + log|(I - kN) e_theta| of a unit vector
  // under the shears I +- kN, N = [[0,0],[1,0]], c = cos(theta), s = sin(theta).
  double (*symmetric_log_stretch)(const double* k, const double* w, std::size_t n, double c, double s);
  double (*dot)(const double* a, const double* b, std::size_t n);
};

// Uniform in [0, 1) with 52 random bits taken from bits 12..63.
double unit52(std::uint64_t bits);

const KernelTable& scalar_kernels();
// nullptr when the build or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();
// Kernel table chosen at first use.
const KernelTable& kernels();
Isa active_isa();

inline void power_law_marks(std::span<const std::uint64_t> bits, std::span<double> marks,
                            const PowerLawParams& params) {
  kernels().power_law_marks(bits.data(), marks.data(), bits.size(), params);
}
inline void exponential_variates(std::span<const std::uint64_t> bits, std::span<double> out) {
  kernels().exponential_variates(bits.data(), out.data(), bits.size());
}
inline double symmetric_log_stretch(std::span<const double> k, std::span<const double> w, double c,
                                    double s) {
  return kernels().symmetric_log_stretch(k.data(), w.data(), k.size(), c, s);
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

namespace detail {
const KernelTable* avx2_table_if_built();
}

}  // namespace levyap::simd
