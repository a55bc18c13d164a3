#include "quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

#include "gte/error.hpp"

namespace gte::detail {
namespace {

template <unsigned N>
GaussRule expand() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  GaussRule r;
  // Boost stores the non-negative half; the zero node appears first for odd N.
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    r.nodes.push_back(-x[i]);
    r.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(x[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

} // namespace

const GaussRule& gauss_rule(int n) {
  static const GaussRule r2 = expand<2>();
  static const GaussRule r3 = expand<3>();
  static const GaussRule r4 = expand<4>();
  static const GaussRule r5 = expand<5>();
  static const GaussRule r8 = expand<8>();
  static const GaussRule r16 = expand<16>();
  static const GaussRule r20 = expand<20>();
  switch (n) {
  case 2: return r2;
  case 3: return r3;
  case 4: return r4;
  case 5: return r5;
  case 8: return r8;
  case 16: return r16;
  case 20: return r20;
  default: throw Error("unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, bool endpoint_singular) {
  QuadratureResult out;
  if (a == b) return out;
  if (endpoint_singular) {
    thread_local boost::math::quadrature::tanh_sinh<double> rule;
    double l1 = 0.0;
    out.value = rule.integrate(f, a, b, 1e-13, &out.error, &l1);
  } else {
    out.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13, &out.error);
  }
  return out;
}

} // namespace gte::detail
