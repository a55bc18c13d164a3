#include "gte/testforms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "gte/dual.hpp"

namespace gte {
namespace {

template <int Depth>
double eval_term(const FormTerm& t, const Vec& x, const int* dirs, const Vec& center, double radius) {
  using T = typename NestedDual<Depth>::type;
  using std::exp;
  const int d = static_cast<int>(x.size());
  std::array<T, kMaxDimension> xs{};
  T s(0.0);
  for (int j = 0; j < d; ++j) {
    xs[j] = seed_variable<Depth>(x[j], j, dirs);
    const T z = (xs[j] - center[j]) / radius;
    s = s + z * z;
  }
  if (base_value(s) >= 1.0) return 0.0;
  const T bump = exp((-1.0) / (1.0 - s));
  const T p = t.poly.eval(xs.data());
  return t.scale * top_derivative<Depth>(p * bump);
}

} // namespace

double bump_profile(double s) { return s >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - s)); }

Polynomial Polynomial::constant(int dimension, double c) {
  Polynomial p(dimension);
  std::array<int, kMaxDimension> zero{};
  p.add(c, std::span<const int>(zero.data(), dimension));
  return p;
}

void Polynomial::add(double coefficient, std::span<const int> exponents) {
  if (static_cast<int>(exponents.size()) != d_) throw Error("polynomial exponent arity mismatch");
  Monomial m;
  m.coefficient = coefficient;
  int total = 0;
  for (int i = 0; i < d_; ++i) {
    if (exponents[i] < 0) throw Error("negative polynomial exponent");
    m.exponents[i] = static_cast<std::uint8_t>(exponents[i]);
    total += exponents[i];
  }
  if (total > kMaxDegree) throw Error("polynomial degree exceeds " + std::to_string(kMaxDegree));
  terms_.push_back(m);
}

int Polynomial::degree() const {
  int deg = 0;
  for (const Monomial& m : terms_) {
    int total = 0;
    for (int i = 0; i < d_; ++i) total += m.exponents[i];
    if (m.coefficient != 0.0) deg = std::max(deg, total);
  }
  return deg;
}

bool Polynomial::is_zero() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Monomial& m) { return m.coefficient == 0.0; });
}

TestForm::TestForm(int dimension, int grade, Vec center, double radius)
    : d_(dimension), k_(grade), center_(std::move(center)), radius_(radius) {
  if (dimension < 1 || dimension > kMaxDimension) throw Error("test form dimension out of range");
  if (grade < 0 || grade > dimension) throw Error("test form grade out of range");
  if (center_.size() != dimension) throw Error("test form center dimension mismatch");
  if (!(radius > 0.0)) throw Error("test form radius must be positive");
}

void TestForm::add_term(const Polynomial& poly, std::span<const int> indices, double scale) {
  if (poly.dimension() != d_) throw Error("polynomial dimension differs from form dimension");
  // Canonicalize through a basis covector to pick up the permutation sign.
  const CoVector basis = CoVector::basis(d_, indices);
  const auto masks = basis_masks(d_, k_);
  for (std::size_t i = 0; i < masks.size(); ++i)
    if (basis[i] != 0.0) add_term(FormTerm{scale * basis[i], poly, masks[i], {}});
}

void TestForm::add_term(FormTerm term) {
  if (std::popcount(static_cast<unsigned>(term.index)) != k_) throw Error("form term grade mismatch");
  if (static_cast<int>(term.derivatives.size()) > kMaxDerivatives) throw Error("form term derivative order too high");
  terms_.push_back(std::move(term));
}

bool TestForm::in_support(const Vec& x) const { return (x - center_).norm() < radius_; }

double TestForm::term_value(const FormTerm& t, const Vec& x, int extra_direction) const {
  std::array<int, kMaxDerivatives + 1> dirs{};
  int depth = 0;
  for (int j : t.derivatives) dirs[depth++] = j;
  if (extra_direction >= 0) dirs[depth++] = extra_direction;
  switch (depth) {
  case 0: return eval_term<0>(t, x, dirs.data(), center_, radius_);
  case 1: return eval_term<1>(t, x, dirs.data(), center_, radius_);
  case 2: return eval_term<2>(t, x, dirs.data(), center_, radius_);
  case 3: return eval_term<3>(t, x, dirs.data(), center_, radius_);
  case 4: return eval_term<4>(t, x, dirs.data(), center_, radius_);
  default: throw Error("form term derivative order too high");
  }
}

CoVector TestForm::eval(const Vec& x) const {
  if (x.size() != d_) throw Error("test form evaluated at a point of wrong dimension");
  CoVector out(d_, k_);
  if ((x - center_).squaredNorm() >= radius_ * radius_) return out;
  for (const FormTerm& t : terms_) out[basis_position(d_, t.index)] += term_value(t, x, -1);
  return out;
}

std::vector<CoVector> TestForm::partials(const Vec& x) const {
  if (x.size() != d_) throw Error("test form evaluated at a point of wrong dimension");
  std::vector<CoVector> out(d_, CoVector(d_, k_));
  if ((x - center_).squaredNorm() >= radius_ * radius_) return out;
  for (const FormTerm& t : terms_) {
    const std::size_t pos = basis_position(d_, t.index);
    for (int j = 0; j < d_; ++j) out[j][pos] += term_value(t, x, j);
  }
  return out;
}

TestForm exterior_derivative(const TestForm& w) {
  if (w.k_ == w.d_) {
    TestForm zero(w.d_, w.d_, w.center_, w.radius_);
    zero.flagged_ = true;
    return zero;
  }
  TestForm out(w.d_, w.k_ + 1, w.center_, w.radius_);
  for (const FormTerm& t : w.terms_) {
    for (int i = 0; i < w.d_; ++i) {
      const IndexMask bit = static_cast<IndexMask>(1u << i);
      if (t.index & bit) continue;
      // dx_i ^ dx_I: move dx_i past the indices of I smaller than i.
      const int below = std::popcount(static_cast<unsigned>(t.index & (bit - 1)));
      FormTerm next = t;
      next.scale = (below & 1) ? -t.scale : t.scale;
      next.index = static_cast<IndexMask>(t.index | bit);
      next.derivatives.push_back(i);
      out.add_term(std::move(next));
    }
  }
  return out;
}

TimeCutoff::TimeCutoff(double center, double radius) : t0_(center), r_(radius) {
  if (!(radius > 0.0) || center - radius < 0.0 || center + radius > 1.0)
    throw Error("time cutoff support must lie inside (0,1)");
}

double TimeCutoff::value(double t) const {
  const double z = (t - t0_) / r_;
  return bump_profile(z * z);
}

double TimeCutoff::derivative(double t) const {
  const Dual<double> z = (Dual<double>(t, 1.0) - t0_) / r_;
  const Dual<double> s = z * z;
  if (s.v >= 1.0) return 0.0;
  return exp((-1.0) / (1.0 - s)).d;
}

FormEvaluator lie_derivative_form(const TestForm& w, const SmoothVectorField& b) {
  if (!b.value || !b.jacobian) throw Error("Lie derivative needs a vector field with a Jacobian");
  return [w, b](const Vec& x) -> CoVector {
    const int d = w.dimension();
    const int k = w.grade();
    CoVector out(d, k);
    if (!w.in_support(x)) return out;
    const Vec bx = b.value(x);
    const Mat jb = b.jacobian(x);
    const CoVector omega = w.eval(x);
    const std::vector<CoVector> domega = w.partials(x);
    // i_b(d w), with d w = sum_j dx_j ^ partial_j w
    if (k < d) {
      CoVector dw(d, k + 1);
      for (int j = 0; j < d; ++j) dw += wedge(CoVector::basis(d, {j + 1}), domega[j]);
      out += interior(bx, dw);
    }
    // d(i_b w) = sum_j dx_j ^ (i_{partial_j b} w + i_b partial_j w)
    if (k > 0) {
      for (int j = 0; j < d; ++j) {
        const CoVector pj = interior(jb.col(j), omega) + interior(bx, domega[j]);
        out += wedge(CoVector::basis(d, {j + 1}), pj);
      }
    }
    return out;
  };
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

std::vector<TimeCutoff> default_cutoffs() { return {TimeCutoff(0.5, 0.45), TimeCutoff(0.35, 0.3), TimeCutoff(0.65, 0.3)}; }

FormDictionary make_dictionary(const DictionaryOptions& o) {
  const int d = o.dimension;
  if (o.lattice_lower.size() != d || o.lattice_upper.size() != d) throw Error("dictionary lattice dimension mismatch");
  if (o.radii.empty() || !(o.spacing > 0.0)) throw Error("dictionary needs radii and a positive spacing");
  FormDictionary dict;
  dict.dimension = d;
  dict.grade = o.grade;
  dict.seed = o.seed;
  dict.cutoffs = default_cutoffs();
  Rng rng(o.seed);
  std::vector<std::uint64_t> counts(d);
  for (int i = 0; i < d; ++i)
    counts[i] = static_cast<std::uint64_t>(std::floor((o.lattice_upper[i] - o.lattice_lower[i]) / o.spacing + 1e-9)) + 1;
  const auto masks = basis_masks(d, o.grade);
  std::array<int, kMaxDimension> e{};
  for (std::size_t f = 0; f < o.size; ++f) {
    Vec c(d);
    for (int i = 0; i < d; ++i) c[i] = o.lattice_lower[i] + o.spacing * static_cast<double>(rng.below(counts[i]));
    const double r = o.radii[rng.below(o.radii.size())];
    TestForm form(d, o.grade, c, r);
    for (IndexMask m : masks) {
      Polynomial p(d);
      e.fill(0);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      p.add(sign * rng.uniform(0.5, 1.5), std::span<const int>(e.data(), d));
      for (int i = 0; i < d; ++i) {
        e.fill(0);
        e[i] = 1;
        p.add(rng.uniform(-1.0, 1.0), std::span<const int>(e.data(), d));
      }
      e.fill(0);
      e[rng.below(d)] += 1;
      e[rng.below(d)] += 1;
      p.add(rng.uniform(-0.5, 0.5), std::span<const int>(e.data(), d));
      if (rng.uniform() < 0.5) {
        e[rng.below(d)] += 1;
        p.add(rng.uniform(-0.25, 0.25), std::span<const int>(e.data(), d));
      }
      FormTerm t;
      t.poly = std::move(p);
      t.index = m;
      form.add_term(std::move(t));
    }
    dict.forms.push_back(std::move(form));
  }
  return dict;
}

} // namespace gte
