#include <cmath>
#include <cstring>

#include "levyap/simd.hpp"

namespace levyap::simd {

double unit52(std::uint64_t bits) {
  const std::uint64_t m = (bits >> 12) | 0x3FF0000000000000ULL;
  double d;
  std::memcpy(&d, &m, sizeof d);
  return d - 1.0;
}

namespace {

void power_law_marks_scalar(const std::uint64_t* bits, double* marks, std::size_t n,
                            const PowerLawParams& p) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit52(bits[i]);
    const double y = std::fma(-u, p.span, p.head);
    const double r = std::exp(p.neg_inv_alpha * std::log(y));
    marks[i] = (bits[i] & 1u) ? -r : r;
  }
}

void exponential_variates_scalar(const std::uint64_t* bits, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit52(bits[i]);
    out[i] = -std::log(1.0 - u);
  }
}

double symmetric_log_stretch_scalar(const double* k, const double* w, std::size_t n, double c,
                                    double s) {
  const double c2 = c * c;
  const double base = 2.0 - 4.0 * s * s;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double kc2 = k[i] * k[i] * c2;
    acc += w[i] * 0.5 * std::log1p(kc2 * (base + kc2));
  }
  return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

constexpr KernelTable kScalar{Isa::Scalar, power_law_marks_scalar, exponential_variates_scalar,
                              symmetric_log_stretch_scalar, dot_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace levyap::simd
