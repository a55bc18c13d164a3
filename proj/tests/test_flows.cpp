#include <doctest.h>

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "gte/flows.hpp"

using namespace gte;

namespace {

Box square(double h) { return Box{Vec::Constant(2, -h), Vec::Constant(2, h)}; }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat sample_matrix() {
  Mat a(2, 2);
  a << 0.2, -1.0, 1.0, -0.3;
  return a;
}

Vec random_point(Rng& rng, double h) { return v2(rng.uniform(-h, h), rng.uniform(-h, h)); }

} // namespace

TEST_CASE("field families") {
  const FieldPtr c = make_constant_field(v2(1.0, 0.5), square(2.0));
  CHECK((c->value(0.3, v2(9.0, 9.0)) - v2(1.0, 0.5)).norm() == 0.0);
  CHECK(c->lip(0.3) == 0.0);
  CHECK(c->sup(0.3) == doctest::Approx(std::sqrt(1.25)));

  const FieldPtr s = make_shear_field(square(2.0));
  CHECK((s->value(0.0, v2(0.3, 0.7)) - v2(0.7, 0.0)).norm() == 0.0);
  CHECK(s->value(0.0, v2(0.3, -0.7)).norm() == 0.0);
  CHECK(!s->jacobian(0.0, v2(0.3, 0.0)).has_value());
  CHECK(s->jacobian(0.0, v2(0.3, 0.5)).has_value());
  CHECK(s->lip(0.4) == 1.0);
  CHECK(s->sup(0.4) == doctest::Approx(2.0));

  CHECK(profile_integral(TimeProfile::InvSqrt, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(profile_integral(TimeProfile::Sine, 0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("class (L) check") {
  const FieldPtr ok = make_linear_field(Mat::Identity(2, 2), TimeProfile::InvSqrt, square(1.0));
  // 1/(2 sqrt t) integrates to 1; sup over [-1,1]^2 adds sqrt 2 times that
  CHECK(check_class_L(*ok) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-6));
  const FieldPtr bad = make_linear_field(Mat::Identity(2, 2), TimeProfile::InvLinear, square(1.0));
  CHECK_THROWS_WITH_AS(check_class_L(*bad), "field not in class (L)", Error);
  CHECK_THROWS_WITH_AS(FlowMap{bad}, "field not in class (L)", Error);
}

TEST_CASE("forward flow") {
  Rng rng(1);
  SUBCASE("zero field") {
    const FlowMap f(make_zero_field(square(2.0)));
    const Vec x = random_point(rng, 2.0);
    CHECK((f.flow(0.0, 0.7, x) - x).norm() == 0.0);
  }
  SUBCASE("constant field") {
    const Vec c = v2(1.0, 0.5);
    const FlowMap f(make_constant_field(c, square(2.0)));
    const Vec x = random_point(rng, 2.0);
    CHECK((f.flow(0.2, 0.9, x) - (x + 0.7 * c)).norm() <= 1e-12);
  }
  SUBCASE("inverse square root profile") {
    // x' = x / (2 sqrt t) gives x e^{sqrt t}
    const FlowMap f(make_linear_field(Mat::Identity(2, 2), TimeProfile::InvSqrt, square(2.0)), 1e-8);
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_point(rng, 1.0);
      const double t = rng.uniform();
      CHECK((f.flow(0.0, t, x) - x * std::exp(std::sqrt(t))).norm() <= 1e-6);
    }
  }
  SUBCASE("linear field against the matrix exponential") {
    const Mat a = sample_matrix();
    const FlowMap f(make_linear_field(a, TimeProfile::One, square(3.0)), 1e-10);
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_point(rng, 1.0);
      const double s = rng.uniform(), t = rng.uniform();
      const Vec oracle = (a * (t - s)).exp() * x;
      CHECK((f.flow(s, t, x) - oracle).norm() <= 1e-8);
    }
  }
  SUBCASE("shear field moves points above the axis linearly") {
    const FlowMap f(make_shear_field(square(2.0)), 1e-10);
    for (double eps : {0.1, 0.025}) {
      const SpaceTimePoint p = f.psi(0.6, v2(0.0, eps));
      CHECK(p.t == 0.6);
      CHECK((p.x - v2(0.6 * eps, eps)).norm() <= 1e-10);
      CHECK((f.flow(0.0, 1.0, v2(0.0, -eps)) - v2(0.0, -eps)).norm() == 0.0);
    }
  }
  SUBCASE("integral equation") {
    const FlowMap f(make_affine_field(FieldFamily::TimeModulated, sample_matrix(), v2(0.1, 0.0), TimeProfile::Sine,
                                      square(3.0)),
                    1e-10);
    CHECK(f.integral_residual(0.1, 0.9, v2(0.5, -0.2)) <= 1e-8);
  }
}

TEST_CASE("inverse flow") {
  Rng rng(2);
  SUBCASE("constant field") {
    const Vec c = v2(-0.5, 2.0);
    const FlowMap f(make_constant_field(c, square(2.0)));
    const Vec y = random_point(rng, 1.0);
    CHECK((f.flow_inverse(0.4, y) - (y - 0.4 * c)).norm() <= 1e-12);
  }
  SUBCASE("linear field") {
    const Mat a = sample_matrix();
    const FlowMap f(make_linear_field(a, TimeProfile::Sine, square(3.0)), 1e-10);
    const double t = 0.8;
    const Vec y = random_point(rng, 1.0);
    const Vec oracle = (-a * profile_integral(TimeProfile::Sine, 0.0, t)).exp() * y;
    CHECK((f.flow_inverse(t, y) - oracle).norm() <= 1e-8);
  }
  SUBCASE("round trip") {
    Mat a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
    const double tol = 1e-8;
    const FlowMap f(make_linear_field(a, TimeProfile::One, square(2.0)), tol);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec x = random_point(rng, 1.0);
      const double t = rng.uniform();
      const SpaceTimePoint p = f.psi(t, x);
      const SpaceTimePoint back = f.psi_inverse(p.t, p.x);
      worst = std::max(worst, (back.x - x).norm() + std::abs(back.t - t));
    }
    CHECK(worst <= 2.0 * tol);
  }
}

TEST_CASE("semigroup identity") {
  Rng rng(3);
  const FlowMap f(make_affine_field(FieldFamily::TimeModulated, sample_matrix(), v2(0.3, -0.1), TimeProfile::InvSqrt,
                                    square(3.0)),
                  1e-10);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    double r = rng.uniform(), s = rng.uniform(), t = rng.uniform();
    const Vec x = random_point(rng, 1.0);
    worst = std::max(worst, (f.flow(s, t, f.flow(r, s, x)) - f.flow(r, t, x)).norm());
  }
  CHECK(worst <= 1e-7);
}

TEST_CASE("directional derivative of the flow") {
  SUBCASE("zero field") {
    const FlowMap f(make_zero_field(square(1.0)));
    const DirectionalDerivative d = f.flow_directional_derivative(0.0, 0.5, v2(0.1, 0.2), v2(3.0, 4.0));
    CHECK((d.value - v2(3.0, 4.0)).norm() <= 1e-12);
  }
  SUBCASE("linear autonomous field") {
    const Mat a = sample_matrix();
    const FlowMap f(make_linear_field(a, TimeProfile::One, square(3.0)), 1e-12);
    const Vec v = v2(0.4, 1.0);
    const DirectionalDerivative d = f.flow_directional_derivative(0.1, 0.8, v2(0.2, -0.3), v);
    CHECK(d.converged);
    CHECK((d.value - (0.7 * a).exp() * v).norm() <= 1e-7);
  }
  SUBCASE("shear field tilts the vertical direction") {
    const FlowMap f(make_shear_field(square(2.0)), 1e-12);
    for (double t : {0.25, 0.5, 1.0}) {
      const DirectionalDerivative d = f.flow_directional_derivative(0.0, t, v2(0.0, 0.1), v2(0.0, 1.0));
      CHECK((d.value - v2(t, 1.0)).norm() <= 1e-7);
    }
  }
}

TEST_CASE("space-time derivatives of Psi") {
  SUBCASE("time direction") {
    CHECK((FlowMap(make_zero_field(square(1.0))).dpsi_time_direction(0.3, v2(0.1, 0.1)) - Vec::Unit(3, 0)).norm() ==
          0.0);
    Vec expected(3);
    expected << 1.0, 1.0, 0.5;
    CHECK((FlowMap(make_constant_field(v2(1.0, 0.5), square(2.0))).dpsi_time_direction(0.3, v2(0.1, 0.1)) - expected)
              .norm() <= 1e-12);
    const double eps = 0.05;
    expected << 1.0, eps, 0.0;
    CHECK((FlowMap(make_shear_field(square(2.0)), 1e-10).dpsi_time_direction(0.0, v2(0.0, eps)) - expected).norm() <=
          1e-12);
  }
  SUBCASE("time quotient approaches the time direction") {
    const FlowMap f(make_linear_field(sample_matrix(), TimeProfile::One, square(3.0)), 1e-12);
    const Vec x = v2(0.3, -0.4);
    const double e1 = (f.psi_time_quotient(0.5, x, 1e-3) - f.dpsi_time_direction(0.5, x)).norm();
    const double e2 = (f.psi_time_quotient(0.5, x, 5e-4) - f.dpsi_time_direction(0.5, x)).norm();
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("inverse quotient: zero and constant fields") {
    const InverseQuotientStudy z = FlowMap(make_zero_field(square(1.0))).dpsi_inverse_flow_direction(0.5, v2(0.2, 0.1));
    for (const Vec& q : z.quotients) CHECK((q - Vec::Unit(3, 0)).norm() == 0.0);
    const InverseQuotientStudy c =
        FlowMap(make_constant_field(v2(1.0, -2.0), square(2.0))).dpsi_inverse_flow_direction(0.5, v2(0.2, 0.1));
    for (double e : c.errors) CHECK(e <= 1e-10);
  }
  SUBCASE("inverse quotient: time-modulated field") {
    const FlowMap f(make_linear_field(Mat::Identity(2, 2), TimeProfile::InvSqrt, square(2.0)), 1e-12);
    const InverseQuotientStudy s = f.dpsi_inverse_flow_direction(0.5, v2(0.3, -0.2));
    CHECK(s.converged);
    CHECK(s.observed_order >= 0.9);
    for (std::size_t i = 0; i + 1 < s.errors.size(); ++i) CHECK(s.errors[i + 1] < s.errors[i]);
    CHECK((s.limit - Vec::Unit(3, 0)).norm() < s.errors.back());
  }
}

TEST_CASE("Gronwall bound") {
  SUBCASE("zero field") {
    const FlowMap f(make_zero_field(square(1.0)));
    CHECK(f.gronwall_bound(0.0, 0.5, 0.5, v2(0, 0), v2(0.3, 0.4)) == doctest::Approx(0.5));
  }
  SUBCASE("constant field, same point") {
    const FlowMap f(make_constant_field(v2(3.0, 4.0), square(1.0)));
    CHECK(f.gronwall_bound(0.0, 0.2, 0.7, v2(0.1, 0.1), v2(0.1, 0.1)) == doctest::Approx(0.5 * 5.0));
  }
  SUBCASE("linear field, same time") {
    const Mat a = sample_matrix();
    const FlowMap f(make_linear_field(a, TimeProfile::One, square(3.0)), 1e-10);
    const double lip = a.operatorNorm();
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
      const Vec x = random_point(rng, 1.0), y = random_point(rng, 1.0);
      const double s = 0.1, t = rng.uniform(0.1, 1.0);
      const double actual = ((a * (t - s)).exp() * (x - y)).norm();
      const double bound = f.gronwall_bound(s, t, t, x, y);
      CHECK(bound == doctest::Approx(std::exp(lip * (t - s)) * (x - y).norm()).epsilon(1e-9));
      CHECK(actual <= bound * (1.0 + 1e-9));
      CHECK((f.flow(s, t, x) - f.flow(s, t, y)).norm() <= bound * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("mollified fields") {
  SUBCASE("constant field is reproduced") {
    const FieldPtr m = mollify(make_constant_field(v2(1.0, 0.5), square(2.0)), 0.1);
    CHECK((m->value(0.5, v2(0.2, 0.3)) - v2(1.0, 0.5)).norm() <= 1e-12);
  }
  SUBCASE("shear field is exact where it is affine") {
    const double eps = 0.05;
    const FieldPtr m = mollify(make_shear_field(square(2.0)), eps);
    CHECK((m->value(0.5, v2(0.1, 0.3)) - v2(0.3, 0.0)).norm() <= 1e-12);
    CHECK(m->value(0.5, v2(0.1, -0.3)).norm() <= 1e-12);
    const double near_axis = m->value(0.5, v2(0.0, 0.0))[0];
    CHECK(near_axis > 0.0);
    CHECK(near_axis < eps);
  }
  SUBCASE("flow error obeys the Gronwall estimate") {
    const FieldPtr b = make_shear_field(square(2.0));
    const FlowMap exact(b, 1e-10);
    for (double eps : {0.1, 0.05}) {
      const FieldPtr be = mollify(b, eps);
      const FlowMap approx(be, 1e-10);
      Rng rng(5);
      // |b - b^eps| <= eps / 2 everywhere for this field (one-sided averaging of max(y, 0))
      const double bound = 0.5 * eps * std::exp(1.0);
      for (int i = 0; i < 20; ++i) {
        const Vec x = random_point(rng, 0.5);
        CHECK((exact.flow(0.0, 0.6, x) - approx.flow(0.0, 0.6, x)).norm() <= bound);
      }
    }
  }
}

TEST_CASE("Lebesgue time sampler") {
  const FieldPtr smooth = make_linear_field(sample_matrix(), TimeProfile::One, square(1.0));
  const auto u = lebesgue_time_sampler(*smooth, 4);
  REQUIRE(u.size() == 4);
  CHECK(u[0] == doctest::Approx(0.125));
  CHECK(u[3] == doctest::Approx(0.875));

  const FieldPtr singular = make_linear_field(sample_matrix(), TimeProfile::InvSqrt, square(1.0));
  for (double t : lebesgue_time_sampler(*singular, 20)) {
    CHECK(t >= 1e-3);
    CHECK(t <= 1.0);
  }

  const FieldPtr gridded = make_gridded_field({0.0, 0.4, 1.0}, {sample_matrix(), Mat::Identity(2, 2)},
                                              {Vec::Zero(2), Vec::Zero(2)}, square(1.0));
  const auto g = lebesgue_time_sampler(*gridded, 2);
  REQUIRE(g.size() == 2);
  CHECK(g[0] == doctest::Approx(0.2));
  CHECK(g[1] == doctest::Approx(0.7));
}
