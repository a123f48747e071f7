// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// is only reached through the runtime dispatcher after a CPU check. It
// deliberately avoids <cmath> and other inline-heavy headers so no AVX code
// leaks into shared inline definitions.
//
// log and exp follow the fdlibm reductions (|error| < 1 ulp); expm1 uses a
// Taylor polynomial near zero where exp(x) - 1 would cancel.

#include <immintrin.h>

#include <cstdint>

#include "bwpart/kernels.hpp"

namespace bwpart::kernels {

namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kLog2e = 1.44269504088896338700e+00;
constexpr double kLn2 = 0.693147180559945309417232121458176568;
constexpr double kSqrt2 = 1.41421356237309504880;

inline __m256d log4(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i exp_bits = _mm256_srli_epi64(bits, 52);
  const __m256i mant_bits =
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                      _mm256_set1_epi64x(0x3FF0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);

  // Small non-negative int64 -> double through the 2^52 magic constant.
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);
  __m256d k = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(exp_bits, _mm256_castpd_si256(magic))), magic);
  k = _mm256_sub_pd(k, _mm256_set1_pd(1023.0));
  k = _mm256_add_pd(k, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  __m256d t1 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.531383769920937332e-01),
                               _mm256_set1_pd(2.222219843214978396e-01));
  t1 = _mm256_fmadd_pd(w, t1, _mm256_set1_pd(3.999999999940941908e-01));
  t1 = _mm256_mul_pd(w, t1);
  __m256d t2 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.479819860511658591e-01),
                               _mm256_set1_pd(1.818357216161805012e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(2.857142874366239149e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(6.666666666666735130e-01));
  t2 = _mm256_mul_pd(z, t2);
  const __m256d r = _mm256_add_pd(t1, t2);
  const __m256d hfsq = _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_mul_pd(f, f));
  // k ln2_hi - ((hfsq - (s (hfsq + R) + k ln2_lo)) - f)
  const __m256d inner = _mm256_fmadd_pd(s, _mm256_add_pd(hfsq, r),
                                        _mm256_mul_pd(k, _mm256_set1_pd(kLn2Lo)));
  return _mm256_sub_pd(_mm256_mul_pd(k, _mm256_set1_pd(kLn2Hi)),
                       _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline __m256d exp4(__m256d x) {
  const __m256d underflow = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ);
  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
  x = _mm256_min_pd(x, _mm256_set1_pd(709.0));
  const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d hi = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Hi), x);
  const __m256d lo = _mm256_mul_pd(k, _mm256_set1_pd(kLn2Lo));
  const __m256d r = _mm256_sub_pd(hi, lo);
  const __m256d t = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(t, _mm256_set1_pd(4.13813679705723846039e-08),
                              _mm256_set1_pd(-1.65339022054652515390e-06));
  p = _mm256_fmadd_pd(t, p, _mm256_set1_pd(6.61375632143793436117e-05));
  p = _mm256_fmadd_pd(t, p, _mm256_set1_pd(-2.77777777770155933842e-03));
  p = _mm256_fmadd_pd(t, p, _mm256_set1_pd(1.66666666666666019037e-01));
  const __m256d c = _mm256_fnmadd_pd(t, p, r);
  // y = 1 - ((lo - (r c)/(2 - c)) - hi)
  const __m256d q = _mm256_div_pd(_mm256_mul_pd(r, c), _mm256_sub_pd(_mm256_set1_pd(2.0), c));
  const __m256d y =
      _mm256_sub_pd(_mm256_set1_pd(1.0), _mm256_sub_pd(_mm256_sub_pd(lo, q), hi));

  const __m128i k32 = _mm256_cvtpd_epi32(k);
  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  k64 = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  const __m256d scaled = _mm256_mul_pd(y, _mm256_castsi256_pd(k64));
  return _mm256_andnot_pd(underflow, scaled);
}

struct InvFactorials {
  double c[14];
  constexpr InvFactorials() : c{} {
    double f = 1.0;
    for (int k = 1; k < 14; ++k) {
      f *= k;
      c[k] = 1.0 / f;
    }
  }
};
constexpr InvFactorials kInvFact;

inline __m256d expm1_4(__m256d x) {
  // sum_{k=1}^{13} x^k / k! for |x| < 0.35
  __m256d p = _mm256_set1_pd(kInvFact.c[13]);
  for (int k = 12; k >= 1; --k) p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(kInvFact.c[k]));
  const __m256d series = _mm256_mul_pd(p, x);
  const __m256d direct = _mm256_sub_pd(exp4(x), _mm256_set1_pd(1.0));
  const __m256d absx = _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
  const __m256d small = _mm256_cmp_pd(absx, _mm256_set1_pd(0.35), _CMP_LT_OQ);
  return _mm256_blendv_pd(direct, series, small);
}

inline __m256i tail_mask(std::size_t remaining) {
  return _mm256_set_epi64x(remaining > 3 ? -1 : 0, remaining > 2 ? -1 : 0,
                           remaining > 1 ? -1 : 0, remaining > 0 ? -1 : 0);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d pow_neg(__m256d x, double a) {
  if (a == 2.0) return _mm256_div_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(x, x));
  return exp4(_mm256_mul_pd(_mm256_set1_pd(-a), log4(x)));
}

void neg_log_avx2(const double* u, double* out, std::size_t n) {
  std::size_t i = 0;
  const __m256d zero = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(zero, log4(_mm256_loadu_pd(u + i))));
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    __m256d v = _mm256_maskload_pd(u + i, mask);
    v = _mm256_blendv_pd(_mm256_set1_pd(1.0), v, _mm256_castsi256_pd(mask));
    _mm256_maskstore_pd(out + i, mask, _mm256_sub_pd(zero, log4(v)));
  }
}

double power_sum_avx2(const double* x, std::size_t n, double a) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, pow_neg(_mm256_loadu_pd(x + i), a));
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    const __m256d maskd = _mm256_castsi256_pd(mask);
    __m256d v = _mm256_maskload_pd(x + i, mask);
    v = _mm256_blendv_pd(_mm256_set1_pd(1.0), v, maskd);
    acc = _mm256_add_pd(acc, _mm256_and_pd(maskd, pow_neg(v, a)));
  }
  return hsum(acc);
}

double weighted_power_sum_avx2(const double* x, const double* w, std::size_t n, double a) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), pow_neg(_mm256_loadu_pd(x + i), a), acc);
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    const __m256d maskd = _mm256_castsi256_pd(mask);
    __m256d v = _mm256_maskload_pd(x + i, mask);
    v = _mm256_blendv_pd(_mm256_set1_pd(1.0), v, maskd);
    const __m256d wv = _mm256_maskload_pd(w + i, mask);
    acc = _mm256_fmadd_pd(wv, _mm256_and_pd(maskd, pow_neg(v, a)), acc);
  }
  return hsum(acc);
}

inline __m256d density4(__m256d b, __m256d inv_e, __m256d exponent) {
  const __m256d em1 = expm1_4(_mm256_mul_pd(b, _mm256_set1_pd(kLn2)));
  const __m256d br = _mm256_sub_pd(_mm256_div_pd(_mm256_set1_pd(1.0), em1),
                                   _mm256_div_pd(inv_e, b));
  const __m256d positive = _mm256_cmp_pd(br, _mm256_setzero_pd(), _CMP_GT_OQ);
  const __m256d safe = _mm256_blendv_pd(_mm256_set1_pd(1.0), br, positive);
  const __m256d value = _mm256_mul_pd(b, exp4(_mm256_mul_pd(exponent, log4(safe))));
  return _mm256_and_pd(positive, value);
}

void density_grid_avx2(const DensityGridArgs& args, double* out, std::size_t n) {
  const __m256d first = _mm256_set1_pd(args.first_b);
  const __m256d step = _mm256_set1_pd(args.step);
  const __m256d inv_e = _mm256_set1_pd(args.inv_eb_n0);
  const __m256d exponent = _mm256_set1_pd(args.exponent);
  const __m256d lane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  std::size_t k = 0;
  for (; k < n; k += 4) {
    const __m256d idx = _mm256_add_pd(_mm256_set1_pd(static_cast<double>(k)), lane);
    // Same rounding as the scalar first_b + k * step (no contraction here).
    const __m256d b = _mm256_add_pd(first, _mm256_mul_pd(idx, step));
    const __m256d v = density4(b, inv_e, exponent);
    if (k + 4 <= n)
      _mm256_storeu_pd(out + k, v);
    else
      _mm256_maskstore_pd(out + k, tail_mask(n - k), v);
  }
}

}  // namespace

const KernelSet& avx2_kernel_table() {
  static const KernelSet set{Isa::avx2, neg_log_avx2, power_sum_avx2, weighted_power_sum_avx2,
                             density_grid_avx2};
  return set;
}

}  // namespace bwpart::kernels
