#include "gte/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gte::kernels::scalar {

double max_slope_to(double x0, double y0, const double* x, const double* y, std::size_t n) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) best = std::max(best, (y0 - y[j]) / (x0 - x[j]));
  return best;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::abs(a[i] - b[i]));
  return best;
}

} // namespace gte::kernels::scalar
