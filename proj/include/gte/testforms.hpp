#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gte/exterior.hpp"

namespace gte {

struct Monomial {
  double coefficient = 0.0;
  std::array<std::uint8_t, kMaxDimension> exponents{};
};

// Polynomial of total degree at most 3 in d variables.
class Polynomial {
public:
  static constexpr int kMaxDegree = 3;

  Polynomial() = default;
  explicit Polynomial(int dimension) : d_(dimension) {}
  static Polynomial constant(int dimension, double c);

  void add(double coefficient, std::span<const int> exponents);
  int dimension() const { return d_; }
  int degree() const;
  const std::vector<Monomial>& monomials() const { return terms_; }
  bool is_zero() const;

  template <class T>
  T eval(const T* x) const {
    T acc(0.0);
    for (const Monomial& m : terms_) {
      T p(m.coefficient);
      for (int i = 0; i < d_; ++i)
        for (int e = 0; e < m.exponents[i]; ++e) p = p * x[i];
      acc = acc + p;
    }
    return acc;
  }

private:
  int d_ = 0;
  std::vector<Monomial> terms_;
};

// scale * (partial_{derivatives} (poly * bump)) dx_index
struct FormTerm {
  double scale = 1.0;
  Polynomial poly;
  IndexMask index = 0;
  std::vector<int> derivatives; // 0-based coordinates, at most kMaxDerivatives
};

// Smooth k-form supported in the closed ball B(center, radius). Coefficients
// are polynomials times exp(-1/(1-|z|^2)), z = (x - center)/radius, and
// derivatives thereof, all evaluated exactly by nested forward differentiation.
class TestForm {
public:
  static constexpr int kMaxDerivatives = 3;

  TestForm() = default;
  TestForm(int dimension, int grade, Vec center, double radius);

  // Adds poly * bump dx_{indices} (1-based indices, any order).
  void add_term(const Polynomial& poly, std::span<const int> indices, double scale = 1.0);
  void add_term(FormTerm term);

  int dimension() const { return d_; }
  int grade() const { return k_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<FormTerm>& terms() const { return terms_; }
  bool flagged() const { return flagged_; }

  bool in_support(const Vec& x) const;
  CoVector eval(const Vec& x) const;
  // Coordinate partials of every coefficient: result[j] = d/dx_j of eval.
  std::vector<CoVector> partials(const Vec& x) const;

private:
  friend TestForm exterior_derivative(const TestForm& w);
  double term_value(const FormTerm& t, const Vec& x, int extra_direction) const;

  int d_ = 0;
  int k_ = 0;
  Vec center_;
  double radius_ = 1.0;
  std::vector<FormTerm> terms_;
  bool flagged_ = false;
};

// Exact d w. For k == d returns the zero form of grade d with flagged() set.
TestForm exterior_derivative(const TestForm& w);

// The standard bump exp(-1/(1-s)), s = |z|^2, clamped to 0 for s >= 1.
double bump_profile(double s);

// Smooth cutoff psi on (0,1) with its exact derivative.
class TimeCutoff {
public:
  TimeCutoff() = default;
  TimeCutoff(double center, double radius);

  double center() const { return t0_; }
  double radius() const { return r_; }
  double value(double t) const;
  double derivative(double t) const;

private:
  double t0_ = 0.5;
  double r_ = 0.25;
};

// A smooth vector field given pointwise with its Jacobian.
struct SmoothVectorField {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
};

using FormEvaluator = std::function<CoVector(const Vec&)>;

// Pointwise evaluator of L_b w = d(i_b w) + i_b(d w).
FormEvaluator lie_derivative_form(const TestForm& w, const SmoothVectorField& b);

// Finite family of test forms and time cutoffs defining the test-form metric.
struct FormDictionary {
  int dimension = 0;
  int grade = 0;
  std::uint64_t seed = 0;
  std::vector<TestForm> forms;
  std::vector<TimeCutoff> cutoffs;
};

struct DictionaryOptions {
  int dimension = 2;
  int grade = 0;
  std::size_t size = 64;
  std::uint64_t seed = 1;
  Vec lattice_lower;  // centers drawn from lattice_lower + spacing * Z^d
  Vec lattice_upper;
  double spacing = 0.25;
  std::vector<double> radii{0.25, 0.5, 1.0};
};

FormDictionary make_dictionary(const DictionaryOptions& options);
std::vector<TimeCutoff> default_cutoffs();

// Portable uniform doubles from a 64-bit Mersenne Twister.
class Rng {
public:
  explicit Rng(std::uint64_t seed);
  double uniform(); // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);

private:
  std::mt19937_64 engine_;
};

} // namespace gte
