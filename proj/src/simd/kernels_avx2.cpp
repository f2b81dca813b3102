// AVX2 + FMA variants. Functions carry a target attribute instead of the
// whole translation unit being compiled with -mavx2, so no VEX-encoded code
// leaks into inline functions shared with the rest of the program.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "tastenet/simd/kernels.hpp"

#define TASTENET_AVX2 __attribute__((target("avx2,fma")))

namespace tastenet::simd {
namespace {

TASTENET_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// exp with Cody-Waite range reduction and a degree-13 Taylor polynomial on
// |r| <= ln2/2; within 2 ulp of std::exp over [-708, 709].
TASTENET_AVX2 inline __m256d exp4(__m256d x) {
  const __m256d hi_limit = _mm256_set1_pd(709.78);
  const __m256d lo_limit = _mm256_set1_pd(-708.39);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

  const __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, xc);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));

  const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
  const __m256d overflow = _mm256_cmp_pd(x, hi_limit, _CMP_GT_OQ);
  const __m256d nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
  result = _mm256_blendv_pd(result, _mm256_setzero_pd(), underflow);
  result = _mm256_blendv_pd(
      result, _mm256_set1_pd(std::numeric_limits<double>::infinity()), overflow);
  return _mm256_blendv_pd(result, x, nan);
}

TASTENET_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

TASTENET_AVX2 void affine_avx2(const double* w, const double* b, const double* x,
                               double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = b[r] + dot_avx2(w + r * cols, x, cols);
  }
}

TASTENET_AVX2 inline void axpy_avx2(double alpha, const double* x, double* y,
                                    std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

TASTENET_AVX2 void affine_transpose_accumulate_avx2(const double* w, const double* g,
                                                    double* out, std::size_t rows,
                                                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(g[r], w + r * cols, out, cols);
}

TASTENET_AVX2 void outer_accumulate_avx2(const double* g, const double* x,
                                         double* out, std::size_t rows,
                                         std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(g[r], x, out + r * cols, cols);
}

TASTENET_AVX2 void exp_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
  if (i < n) {
    double in[4] = {0.0, 0.0, 0.0, 0.0};
    double out[4];
    for (std::size_t k = 0; i + k < n; ++k) in[k] = x[i + k];
    _mm256_storeu_pd(out, exp4(_mm256_loadu_pd(in)));
    for (std::size_t k = 0; i + k < n; ++k) y[i + k] = out[k];
  }
}

TASTENET_AVX2 MixtureSums logit_mixture_avx2(const double* base, const double* slope,
                                             std::size_t alternatives,
                                             std::size_t chosen, double mu,
                                             double sigma, const double* eps,
                                             std::size_t draws, double* d_base) {
  __m256d u[kMaxMixtureAlternatives];
  __m256d grad_base[kMaxMixtureAlternatives];
  for (std::size_t j = 0; j < alternatives; ++j) grad_base[j] = _mm256_setzero_pd();
  __m256d prob = _mm256_setzero_pd();
  __m256d d_mu = _mm256_setzero_pd();
  __m256d d_sigma = _mm256_setzero_pd();

  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vsigma = _mm256_set1_pd(sigma);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d slope_chosen = _mm256_set1_pd(slope[chosen]);

  // Padding lanes get eps = 0 and are masked out of every accumulator.
  const std::size_t blocks = (draws + 3) / 4;
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t r0 = blk * 4;
    double eps_lane[4] = {0.0, 0.0, 0.0, 0.0};
    double mask_lane[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < 4 && r0 + k < draws; ++k) {
      eps_lane[k] = eps[r0 + k];
      mask_lane[k] = 1.0;
    }
    const __m256d e = _mm256_loadu_pd(eps_lane);
    const __m256d mask = _mm256_loadu_pd(mask_lane);
    const __m256d beta = _mm256_fmadd_pd(vsigma, e, vmu);

    __m256d top = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < alternatives; ++j) {
      u[j] = _mm256_fmadd_pd(beta, _mm256_set1_pd(slope[j]), _mm256_set1_pd(base[j]));
      top = _mm256_max_pd(top, u[j]);
    }
    __m256d denom = _mm256_setzero_pd();
    for (std::size_t j = 0; j < alternatives; ++j) {
      u[j] = exp4(_mm256_sub_pd(u[j], top));
      denom = _mm256_add_pd(denom, u[j]);
    }
    const __m256d inv = _mm256_div_pd(one, denom);
    __m256d mean_slope = _mm256_setzero_pd();
    for (std::size_t j = 0; j < alternatives; ++j) {
      u[j] = _mm256_mul_pd(u[j], inv);
      mean_slope = _mm256_fmadd_pd(u[j], _mm256_set1_pd(slope[j]), mean_slope);
    }
    const __m256d p = _mm256_mul_pd(u[chosen], mask);
    const __m256d dbeta = _mm256_mul_pd(p, _mm256_sub_pd(slope_chosen, mean_slope));
    prob = _mm256_add_pd(prob, p);
    d_mu = _mm256_add_pd(d_mu, dbeta);
    d_sigma = _mm256_fmadd_pd(dbeta, e, d_sigma);
    for (std::size_t j = 0; j < alternatives; ++j) {
      const __m256d indicator = j == chosen ? one : _mm256_setzero_pd();
      grad_base[j] =
          _mm256_fmadd_pd(p, _mm256_sub_pd(indicator, u[j]), grad_base[j]);
    }
  }

  MixtureSums sums;
  sums.prob = hsum(prob);
  sums.d_mu = hsum(d_mu);
  sums.d_sigma = hsum(d_sigma);
  for (std::size_t j = 0; j < alternatives; ++j) d_base[j] = hsum(grad_base[j]);
  return sums;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      Isa::avx2,
      dot_avx2,
      affine_avx2,
      affine_transpose_accumulate_avx2,
      outer_accumulate_avx2,
      exp_avx2,
      logit_mixture_avx2,
  };
  return table;
}

}  // namespace tastenet::simd

#endif
