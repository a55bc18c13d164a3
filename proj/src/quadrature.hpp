#pragma once

#include <functional>
#include <vector>

namespace gte::detail {

struct GaussRule {
  std::vector<double> nodes;   // on [-1, 1], ascending
  std::vector<double> weights; // sum to 2
};

// Gauss-Legendre rules for n in {2, 3, 4, 5, 8, 16, 20}.
const GaussRule& gauss_rule(int n);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive quadrature of f on [a, b]; the tanh-sinh rule is used when an
// endpoint is singular, Gauss-Kronrod otherwise.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, bool endpoint_singular);

} // namespace gte::detail
