#include <doctest.h>

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gte/flows.hpp"
#include "gte/testforms.hpp"

using namespace gte;

namespace {

Polynomial random_poly(Rng& rng, int d) {
  Polynomial p(d);
  std::vector<int> e(d);
  for (int term = 0; term < 4; ++term) {
    int left = Polynomial::kMaxDegree;
    for (int i = 0; i < d; ++i) {
      e[i] = static_cast<int>(rng.below(left + 1));
      left -= e[i];
    }
    p.add(rng.uniform(-1.0, 1.0), e);
  }
  return p;
}

TestForm random_form(Rng& rng, int d, int k) {
  Vec c(d);
  for (int i = 0; i < d; ++i) c[i] = rng.uniform(-0.5, 0.5);
  TestForm w(d, k, c, rng.uniform(0.5, 1.5));
  for (IndexMask m : basis_masks(d, k)) {
    std::vector<int> idx;
    for (int i = 0; i < d; ++i)
      if (m & (1u << i)) idx.push_back(i + 1);
    w.add_term(random_poly(rng, d), idx);
  }
  return w;
}

Vec point_in(Rng& rng, const TestForm& w) {
  Vec x(w.dimension());
  for (int i = 0; i < x.size(); ++i) x[i] = w.center()[i] + rng.uniform(-0.7, 0.7) * w.radius() / std::sqrt(x.size());
  return x;
}

} // namespace

TEST_CASE("polynomial degree and evaluation") {
  Polynomial p(2);
  p.add(2.0, std::vector<int>{1, 2});
  p.add(-1.0, std::vector<int>{0, 0});
  CHECK(p.degree() == 3);
  const double x[2] = {0.5, 2.0};
  CHECK(p.eval(x) == doctest::Approx(2.0 * 0.5 * 4.0 - 1.0));
  CHECK_THROWS_AS(p.add(1.0, std::vector<int>{2, 2}), Error);
}

TEST_CASE("evaluation of a test form") {
  Vec c(2);
  c << 0.3, -0.2;
  Polynomial p(2);
  p.add(1.0, std::vector<int>{0, 0});
  p.add(2.0, std::vector<int>{1, 0});
  TestForm w(2, 1, c, 0.5);
  w.add_term(p, std::vector<int>{1});
  SUBCASE("value at the center") {
    // bump(0) = e^{-1}, poly(c) = 1 + 2 c_1
    const CoVector v = w.eval(c);
    CHECK(v.coefficient(0b01) == doctest::Approx((1.0 + 2.0 * 0.3) * std::exp(-1.0)).epsilon(1e-15));
    CHECK(v.coefficient(0b10) == 0.0);
  }
  SUBCASE("compact support") {
    Vec x = c;
    x[0] += 0.5;
    CHECK(w.eval(x).is_zero());
    CHECK(!w.in_support(x));
    x[0] += 1.0;
    CHECK(w.eval(x).is_zero());
  }
  SUBCASE("zero polynomial") {
    TestForm z(2, 1, c, 0.5);
    z.add_term(Polynomial(2), std::vector<int>{2});
    CHECK(z.eval(c).is_zero());
  }
}

TEST_CASE("exterior derivative") {
  SUBCASE("a radial bump is critical at its center") {
    TestForm w(2, 0, Vec::Zero(2), 1.0);
    w.add_term(Polynomial::constant(2, 1.0), std::vector<int>{});
    CHECK(exterior_derivative(w).eval(Vec::Zero(2)).max_abs() <= 1e-15);
  }
  SUBCASE("d of d vanishes") {
    Rng rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + static_cast<int>(rng.below(3));
      const int k = static_cast<int>(rng.below(d - 1));
      const TestForm w = random_form(rng, d, k);
      const TestForm ddw = exterior_derivative(exterior_derivative(w));
      worst = std::max(worst, ddw.eval(point_in(rng, w)).max_abs());
    }
    CHECK(worst <= 1e-10);
  }
  SUBCASE("top grade is flagged") {
    TestForm w(2, 2, Vec::Zero(2), 1.0);
    w.add_term(Polynomial::constant(2, 1.0), std::vector<int>{1, 2});
    const TestForm dw = exterior_derivative(w);
    CHECK(dw.flagged());
    CHECK(dw.grade() == 2);
    CHECK(dw.eval(Vec::Zero(2)).is_zero());
  }
  SUBCASE("central differences converge at second order") {
    // w = x1 B dx2, so dw = d/dx1 (x1 B) dx1 ^ dx2
    Vec c(2);
    c << 0.1, 0.2;
    Polynomial p(2);
    p.add(1.0, std::vector<int>{1, 0});
    TestForm w(2, 1, c, 0.8);
    w.add_term(p, std::vector<int>{2});
    const TestForm dw = exterior_derivative(w);
    Vec x(2);
    x << 0.3, 0.05;
    const double exact = dw.eval(x).coefficient(0b11);
    std::vector<double> errs;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      Vec xp = x, xm = x;
      xp[0] += h;
      xm[0] -= h;
      const double fd = (w.eval(xp).coefficient(0b10) - w.eval(xm).coefficient(0b10)) / (2.0 * h);
      errs.push_back(std::abs(fd - exact));
    }
    CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("partials agree with finite differences") {
    Rng rng(12);
    const TestForm w = random_form(rng, 3, 1);
    const Vec x = point_in(rng, w);
    const auto parts = w.partials(x);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-5;
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const CoVector fd = (1.0 / (2.0 * h)) * (w.eval(xp) - w.eval(xm));
      CHECK((fd - parts[j]).max_abs() <= 1e-7);
    }
  }
}

TEST_CASE("time cutoff") {
  const TimeCutoff psi(0.5, 0.25);
  CHECK(psi.value(0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(psi.value(0.2) == 0.0);
  CHECK(psi.value(0.75) == 0.0);
  for (double t : {0.3, 0.45, 0.6, 0.7}) {
    const double h = 1e-6;
    CHECK(psi.derivative(t) == doctest::Approx((psi.value(t + h) - psi.value(t - h)) / (2.0 * h)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(TimeCutoff(0.1, 0.2), Error);
}

TEST_CASE("Lie derivative of forms") {
  SUBCASE("zero field") {
    Rng rng(1);
    const TestForm w = random_form(rng, 2, 1);
    SmoothVectorField b{[](const Vec& x) { return Vec(Vec::Zero(x.size())); },
                        [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); }};
    CHECK(lie_derivative_form(w, b)(point_in(rng, w)).is_zero());
  }
  SUBCASE("functions are differentiated along the field") {
    Rng rng(2);
    const TestForm phi = random_form(rng, 3, 0);
    Mat a(3, 3);
    a << 0.1, 1.0, 0.0, -0.5, 0.2, 0.3, 0.0, 0.7, -1.0;
    SmoothVectorField b{[a](const Vec& x) { return Vec(a * x + Vec::Ones(3)); }, [a](const Vec&) { return a; }};
    const TestForm dphi = exterior_derivative(phi);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = point_in(rng, phi);
      const double expected = pair(MultiVector::vector(b.value(x)), dphi.eval(x));
      CHECK(lie_derivative_form(phi, b)(x)[0] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("shear field matches the pullback difference quotient") {
    // b(x, y) = (y, 0) above the axis, Phi_h(x, y) = (x + h y, y), and for
    // w = phi dx1 the pullback is phi(Phi_h p) (dx1 + h dx2).
    Vec c(2);
    c << 0.0, 1.0;
    Polynomial p(2);
    p.add(1.0, std::vector<int>{1, 0});
    p.add(0.5, std::vector<int>{0, 1});
    TestForm w(2, 1, c, 0.5);
    w.add_term(p, std::vector<int>{1});
    const FieldPtr shear = make_shear_field(Box{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)});
    Vec x(2);
    x << 0.1, 1.1;
    const CoVector lie = lie_derivative_form(w, shear->at_time(0.5))(x);
    std::vector<double> errs;
    for (double h : {1e-3, 5e-4, 2.5e-4}) {
      Vec moved = x;
      moved[0] += h * x[1];
      const double phi_moved = w.eval(moved).coefficient(0b01);
      CoVector pulled(2, 1);
      pulled[0] = phi_moved;
      pulled[1] = h * phi_moved;
      const CoVector quotient = (1.0 / h) * (pulled - w.eval(x));
      errs.push_back((quotient - lie).max_abs());
    }
    CHECK(errs[2] < 1e-3);
    CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.1));
    CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("Cartan formula against the computed flow") {
    Mat a(2, 2);
    a << 0.2, -1.0, 1.0, -0.3;
    const Box box{Vec::Constant(2, -3.0), Vec::Constant(2, 3.0)};
    const FlowMap flow(make_linear_field(a, TimeProfile::One, box), 1e-12);
    Rng rng(30);
    const TestForm w = random_form(rng, 2, 1);
    const Vec x = point_in(rng, w);
    const CoVector lie = lie_derivative_form(w, flow.field().at_time(0.0))(x);
    std::vector<double> errs;
    for (double h : {1e-3, 5e-4, 2.5e-4}) {
      const Vec moved = flow.flow(0.0, h, x);
      const Mat jac = (h * a).exp();
      const CoVector at = w.eval(moved);
      CoVector pulled(2, 1);
      for (int i = 0; i < 2; ++i) pulled[i] = at[0] * jac(0, i) + at[1] * jac(1, i);
      errs.push_back(((1.0 / h) * (pulled - w.eval(x)) - lie).max_abs());
    }
    CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.1));
    CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("missing Jacobian") {
    TestForm w(2, 1, Vec::Zero(2), 1.0);
    SmoothVectorField b{[](const Vec& x) { return x; }, nullptr};
    CHECK_THROWS_AS(lie_derivative_form(w, b), Error);
  }
}

TEST_CASE("dictionary") {
  DictionaryOptions o;
  o.dimension = 2;
  o.grade = 1;
  o.size = 32;
  o.seed = 3;
  o.lattice_lower = Vec::Constant(2, -1.0);
  o.lattice_upper = Vec::Constant(2, 1.0);
  const FormDictionary a = make_dictionary(o);
  const FormDictionary b = make_dictionary(o);
  REQUIRE(a.forms.size() == 32);
  CHECK(!a.cutoffs.empty());
  for (std::size_t i = 0; i < a.forms.size(); ++i) {
    CHECK(a.forms[i].grade() == 1);
    CHECK((a.forms[i].center() - b.forms[i].center()).norm() == 0.0);
    for (int j = 0; j < 2; ++j) {
      const double c = a.forms[i].center()[j];
      CHECK(c >= -1.0);
      CHECK(c <= 1.0);
      CHECK(std::abs(c / 0.25 - std::round(c / 0.25)) < 1e-12);
    }
  }
  o.seed = 4;
  const FormDictionary other = make_dictionary(o);
  bool differs = false;
  for (std::size_t i = 0; i < a.forms.size(); ++i)
    differs = differs || (a.forms[i].center() - other.forms[i].center()).norm() > 0.0;
  CHECK(differs);
}
