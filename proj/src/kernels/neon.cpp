#include "gte/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#if defined(__aarch64__) || defined(_M_ARM64)
#define GTE_HAS_NEON 1
#include <arm_neon.h>
#else
#define GTE_HAS_NEON 0
#endif

namespace gte::kernels::neon {

#if GTE_HAS_NEON

double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n) {
  const float64x2_t vx0 = vdupq_n_f64(x0);
  const float64x2_t vy0 = vdupq_n_f64(y0);
  float64x2_t acc = vdupq_n_f64(-std::numeric_limits<double>::infinity());
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t num = vsubq_f64(vy0, vld1q_f64(y + j));
    const float64x2_t den = vsubq_f64(vx0, vld1q_f64(x + j));
    acc = vmaxq_f64(acc, vdivq_f64(num, den));
  }
  double best = vmaxvq_f64(acc);
  for (; j < n; ++j) best = std::max(best, (y0 - y[j]) / (x0 - x[j]));
  return best;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double best = vmaxvq_f64(acc);
  for (; i < n; ++i) best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

#else

double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n) {
  return scalar::max_slope_to(x0, y0, x, y, n);
}
double max_abs_diff(const double* a, const double* b, std::size_t n) { return scalar::max_abs_diff(a, b, n); }

#endif

} // namespace gte::kernels::neon
