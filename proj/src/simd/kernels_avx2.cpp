// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached through the
// runtime dispatch in dispatch.cpp after a CPU feature check.

#include <immintrin.h>

#include <cmath>

#include "levyap/simd.hpp"

namespace levyap::simd {
namespace {

inline __m256d splat(double v) { return _mm256_set1_pd(v); }

// Exact conversion of integers in [0, 2^52) held in 64-bit lanes.
inline __m256d u52_to_double(__m256i v) {
  const __m256i magic_bits = _mm256_set1_epi64x(0x4330000000000000LL);
  return _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(v, magic_bits)), splat(0x1.0p52));
}

// log(x) for finite x > 0 (normal range). Reduction m in [sqrt(1/2), sqrt(2)),
// log m = 2 atanh(s), s = (m - 1) / (m + 1), odd series through s^23.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);

  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  __m256d e = u52_to_double(_mm256_srli_epi64(bits, 52));
  e = _mm256_sub_pd(e, splat(1023.0));

  const __m256d big = _mm256_cmp_pd(m, splat(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, splat(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, splat(1.0)));

  const __m256d f = _mm256_sub_pd(m, splat(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(f, splat(2.0)));
  const __m256d s2 = _mm256_mul_pd(s, s);

  __m256d p = splat(1.0 / 23.0);
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 21.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, s2, splat(1.0 / 3.0));
  // log m = 2s + 2s * s2 * p
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, s2), p, two_s);

  const __m256d ln2_hi = splat(6.93147180369123816490e-01);
  const __m256d ln2_lo = splat(1.90821492927058770002e-10);
  return _mm256_fmadd_pd(e, ln2_hi, _mm256_fmadd_pd(e, ln2_lo, log_m));
}

// exp(x) for x in roughly [-700, 700]. x = n ln2 + r, |r| <= ln2/2, Taylor to r^13.
inline __m256d exp_pd(__m256d x) {
  x = _mm256_min_pd(_mm256_max_pd(x, splat(-700.0)), splat(700.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, splat(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, splat(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, splat(1.90821492927058770002e-10), r);

  __m256d p = splat(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, splat(0.5));
  p = _mm256_fmadd_pd(p, r, splat(1.0));
  p = _mm256_fmadd_pd(p, r, splat(1.0));

  // 2^n through the exponent field; n is integral and within the normal range.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i scale = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(scale));
}

inline __m256d unit52_pd(__m256i bits) {
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  const __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_srli_epi64(bits, 12), one_bits));
  return _mm256_sub_pd(m, splat(1.0));
}

void power_law_marks_avx2(const std::uint64_t* bits, double* marks, std::size_t n,
                          const PowerLawParams& p) {
  const __m256d head = splat(p.head);
  const __m256d span = splat(p.span);
  const __m256d expo = splat(p.neg_inv_alpha);
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i sign_bit = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits + i));
    const __m256d u = unit52_pd(b);
    const __m256d y = _mm256_fnmadd_pd(u, span, head);
    const __m256d r = exp_pd(_mm256_mul_pd(expo, log_pd(y)));
    // Move bit 0 to the sign position.
    const __m256i neg = _mm256_and_si256(_mm256_slli_epi64(_mm256_and_si256(b, one), 63), sign_bit);
    _mm256_storeu_pd(marks + i, _mm256_xor_pd(r, _mm256_castsi256_pd(neg)));
  }
  if (i < n) scalar_kernels().power_law_marks(bits + i, marks + i, n - i, p);
}

void exponential_variates_avx2(const std::uint64_t* bits, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits + i));
    const __m256d tail = _mm256_sub_pd(splat(1.0), unit52_pd(b));
    const __m256d v = log_pd(tail);
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_setzero_pd(), v));
  }
  if (i < n) scalar_kernels().exponential_variates(bits + i, out + i, n - i);
}

double symmetric_log_stretch_avx2(const double* k, const double* w, std::size_t n, double c,
                                  double s) {
  const __m256d c2 = splat(c * c);
  const __m256d base = splat(2.0 - 4.0 * s * s);
  const __m256d one = splat(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d kv = _mm256_loadu_pd(k + i);
    const __m256d kc2 = _mm256_mul_pd(_mm256_mul_pd(kv, kv), c2);
    const __m256d y = _mm256_mul_pd(kc2, _mm256_add_pd(base, kc2));
    // log1p(y) = log(u) - ((u - 1) - y) / u with u = 1 + y.
    const __m256d u = _mm256_add_pd(one, y);
    const __m256d corr = _mm256_div_pd(_mm256_sub_pd(_mm256_sub_pd(u, one), y), u);
    const __m256d l1p = _mm256_sub_pd(log_pd(u), corr);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), _mm256_mul_pd(splat(0.5), l1p), acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  if (i < n) total += scalar_kernels().symmetric_log_stretch(k + i, w + i, n - i, c, s);
  return total;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

constexpr KernelTable kAvx2{Isa::Avx2, power_law_marks_avx2, exponential_variates_avx2,
                            symmetric_log_stretch_avx2, dot_avx2};

}  // namespace

namespace detail {
const KernelTable* avx2_table_if_built() { return &kAvx2; }
}  // namespace detail

}  // namespace levyap::simd
