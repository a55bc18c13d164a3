#include "gte/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#if defined(__x86_64__) || defined(_M_X64)
#define GTE_HAS_X86 1
#include <immintrin.h>
#else
#define GTE_HAS_X86 0
#endif

namespace gte::kernels::avx2 {

#if GTE_HAS_X86

namespace {
__attribute__((target("avx2"))) inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  hi = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, hi));
}
} // namespace

__attribute__((target("avx2"))) double max_slope_to(double x0, double y0, const double* x, const double* y,
                                                    std::size_t n) {
  const __m256d vx0 = _mm256_set1_pd(x0);
  const __m256d vy0 = _mm256_set1_pd(y0);
  __m256d acc0 = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d acc1 = acc0;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    const __m256d n0 = _mm256_sub_pd(vy0, _mm256_loadu_pd(y + j));
    const __m256d d0 = _mm256_sub_pd(vx0, _mm256_loadu_pd(x + j));
    const __m256d n1 = _mm256_sub_pd(vy0, _mm256_loadu_pd(y + j + 4));
    const __m256d d1 = _mm256_sub_pd(vx0, _mm256_loadu_pd(x + j + 4));
    acc0 = _mm256_max_pd(acc0, _mm256_div_pd(n0, d0));
    acc1 = _mm256_max_pd(acc1, _mm256_div_pd(n1, d1));
  }
  for (; j + 4 <= n; j += 4) {
    const __m256d n0 = _mm256_sub_pd(vy0, _mm256_loadu_pd(y + j));
    const __m256d d0 = _mm256_sub_pd(vx0, _mm256_loadu_pd(x + j));
    acc0 = _mm256_max_pd(acc0, _mm256_div_pd(n0, d0));
  }
  double best = hmax(_mm256_max_pd(acc0, acc1));
  for (; j < n; ++j) best = std::max(best, (y0 - y[j]) / (x0 - x[j]));
  return best;
}

__attribute__((target("avx2"))) double max_abs_diff(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double best = hmax(acc);
  for (; i < n; ++i) best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

#else

double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n) {
  return scalar::max_slope_to(x0, y0, x, y, n);
}
double max_abs_diff(const double* a, const double* b, std::size_t n) { return scalar::max_abs_diff(a, b, n); }

#endif

} // namespace gte::kernels::avx2
