#pragma once

#include <cmath>

namespace gte {

// Forward-mode dual number. Nesting Dual<Dual<double>> yields exact mixed
// second partials, and so on; used to differentiate the test-form
// coefficients in closed form.
template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double c) : v(c), d(0.0) {}
  Dual(T value, T deriv) : v(value), d(deriv) {}
};

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
template <class T> Dual<T> operator+(const Dual<T>& a, double c) { return {a.v + c, a.d}; }
template <class T> Dual<T> operator+(double c, const Dual<T>& a) { return {a.v + c, a.d}; }
template <class T> Dual<T> operator-(const Dual<T>& a, double c) { return {a.v - c, a.d}; }
template <class T> Dual<T> operator-(double c, const Dual<T>& a) { return {c - a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double c) { return {a.v * c, a.d * c}; }
template <class T> Dual<T> operator*(double c, const Dual<T>& a) { return {a.v * c, a.d * c}; }
template <class T> Dual<T> operator/(const Dual<T>& a, double c) { return {a.v / c, a.d / c}; }
template <class T> Dual<T> operator/(double c, const Dual<T>& a) { return {c / a.v, -(c * a.d) / (a.v * a.v)}; }

template <class T> Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return {e, e * a.d};
}

inline double base_value(double x) { return x; }
template <class T> double base_value(const Dual<T>& a) { return base_value(a.v); }

template <int Depth> struct NestedDual { using type = Dual<typename NestedDual<Depth - 1>::type>; };
template <> struct NestedDual<0> { using type = double; };

// Seeds coordinate j so that nesting level l differentiates along dirs[l].
template <int Depth>
typename NestedDual<Depth>::type seed_variable(double value, int j, const int* dirs) {
  if constexpr (Depth == 0) {
    return value;
  } else {
    using Inner = typename NestedDual<Depth - 1>::type;
    return {seed_variable<Depth - 1>(value, j, dirs), Inner(j == dirs[Depth - 1] ? 1.0 : 0.0)};
  }
}

// The mixed partial along every seeded direction.
template <int Depth>
double top_derivative(const typename NestedDual<Depth>::type& x) {
  if constexpr (Depth == 0) {
    return x;
  } else {
    return top_derivative<Depth - 1>(x.d);
  }
}

} // namespace gte
