#include <doctest.h>

#include <cmath>
#include <vector>

#include "gte/acreg.hpp"
#include "gte/testforms.hpp"

using namespace gte;

namespace {

std::vector<double> uniform_nodes(double a, double b, int cells) {
  std::vector<double> g(cells + 1);
  for (int i = 0; i <= cells; ++i) g[i] = a + (b - a) * i / cells;
  return g;
}

// Indicator of [0, 1] sampled on [-4, 4] with spacing 1/8.
Sampled1D indicator() {
  const auto grid = uniform_nodes(-4.0, 4.0, 64);
  std::vector<double> v(64);
  for (int i = 0; i < 64; ++i) v[i] = (grid[i] >= 0.0 && grid[i + 1] <= 1.0) ? 1.0 : 0.0;
  return Sampled1D::constant(grid, v);
}

// Closed form of Mg for the indicator of [0, 1].
double indicator_maximal(double x) {
  if (x < 0.0) return 1.0 / (1.0 - x);
  if (x > 1.0) return 1.0 / x;
  return 1.0;
}

Sampled1D random_density(Rng& rng, int cells) {
  std::vector<double> grid{0.0};
  for (int i = 0; i < cells; ++i) grid.push_back(grid.back() + rng.uniform(0.01, 1.0));
  std::vector<double> v(cells);
  for (double& x : v) x = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 5.0);
  return Sampled1D::constant(grid, v);
}

// f = sqrt t with g its exact cell-average derivative.
std::pair<Sampled1D, Sampled1D> sqrt_pair(int cells) {
  std::vector<double> grid(cells + 1), f(cells + 1), g(cells);
  for (int i = 0; i <= cells; ++i) {
    const double u = static_cast<double>(i) / cells;
    grid[i] = u * u; // graded towards the singularity
    f[i] = std::sqrt(grid[i]);
  }
  for (int i = 0; i < cells; ++i) g[i] = (f[i + 1] - f[i]) / (grid[i + 1] - grid[i]);
  return {Sampled1D::linear(grid, f), Sampled1D::constant(grid, g)};
}

} // namespace

TEST_CASE("sampled functions") {
  const Sampled1D l = Sampled1D::linear({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
  CHECK(l(0.5) == doctest::Approx(1.0));
  CHECK(l(2.0) == doctest::Approx(1.0));
  CHECK(l.total_integral() == doctest::Approx(3.0));
  const Sampled1D c = Sampled1D::constant({0.0, 1.0, 3.0}, {2.0, 1.0});
  CHECK(c(0.5) == 2.0);
  CHECK(c(5.0) == 0.0);
  CHECK(c.integral(0.5, 2.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(Sampled1D::linear({0.0, 0.0}, {1.0, 1.0}), Error);
}

TEST_CASE("closed sets on a window") {
  const ClosedSet1D e(0.0, 10.0, {{1.0, 2.0}, {4.0, 10.0}});
  CHECK(e.measure() == doctest::Approx(7.0));
  CHECK(e.complement_measure() == doctest::Approx(3.0));
  REQUIRE(e.gaps().size() == 2);
  CHECK(e.gaps()[0].lower == 0.0);
  CHECK(e.gaps()[0].upper == 1.0);
  CHECK(e.gaps()[1].lower == 2.0);
  CHECK(e.gaps()[1].upper == 4.0);
  CHECK(e.contains(1.5));
  CHECK(!e.contains(3.0));
  CHECK(e.clamped().contains(0.0));
}

TEST_CASE("maximal function") {
  SUBCASE("zero and constant densities") {
    const auto grid = uniform_nodes(0.0, 1.0, 10);
    const Sampled1D zero = maximal_function(Sampled1D::constant(grid, std::vector<double>(10, 0.0)));
    for (double v : zero.values) CHECK(v == 0.0);
    const Sampled1D three = maximal_function(Sampled1D::constant(grid, std::vector<double>(10, 3.0)));
    for (double v : three.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("indicator of the unit interval") {
    const Sampled1D g = indicator();
    const Sampled1D mg = maximal_function(g);
    for (std::size_t i = 0; i < mg.grid.size(); ++i) CHECK(std::abs(mg.values[i] - indicator_maximal(mg.grid[i])) <= 1e-10);
  }
  SUBCASE("fast scan, pairwise reference and brute force agree") {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
      const Sampled1D g = random_density(rng, 5 + static_cast<int>(rng.below(60)));
      const Sampled1D fast = maximal_function(g);
      const Sampled1D ref = maximal_function_reference(g);
      const Sampled1D brute = maximal_function_brute_force(g);
      for (std::size_t i = 0; i < fast.values.size(); ++i) {
        CHECK(std::abs(fast.values[i] - ref.values[i]) <= 1e-12 * (1.0 + ref.values[i]));
        CHECK(std::abs(brute.values[i] - ref.values[i]) <= 1e-12 * (1.0 + ref.values[i]));
      }
    }
  }
  SUBCASE("weak type bound") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const Sampled1D g = random_density(rng, 200);
      CHECK(weak_type_constant(maximal_function(g), g) <= 2.0 + 1e-6);
    }
  }
  SUBCASE("dominates the density") {
    Rng rng(8);
    const Sampled1D g = random_density(rng, 100);
    const Sampled1D mg = maximal_function(g);
    for (std::size_t i = 0; i < g.cells(); ++i) {
      CHECK(mg.values[i] >= g.values[i] - 1e-12);
      CHECK(mg.values[i + 1] >= g.values[i] - 1e-12);
    }
  }
  SUBCASE("rejects a negative density") {
    CHECK_THROWS_AS(maximal_function(Sampled1D::constant({0.0, 1.0}, {-1.0})), Error);
  }
}

TEST_CASE("sublevel sets") {
  const Sampled1D mg = maximal_function(indicator());
  SUBCASE("inverting the closed form at one half") {
    // 1/x = 1/2 at x = 2 and 1/(1 - x) = 1/2 at x = -1
    const Sublevel s = sublevel_closed(mg, 0.5);
    CHECK(!s.flagged);
    REQUIRE(s.set.intervals().size() == 2);
    CHECK(s.set.intervals()[0].lower == -4.0);
    CHECK(s.set.intervals()[0].upper == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(s.set.intervals()[1].lower == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.set.intervals()[1].upper == 4.0);
  }
  SUBCASE("level above the maximum keeps the window") {
    const Sublevel s = sublevel_closed(mg, 5.0);
    CHECK(s.set.complement_measure() == 0.0);
  }
  SUBCASE("level below the minimum is flagged") {
    const Sublevel s = sublevel_closed(mg, 0.01);
    CHECK(s.flagged);
    CHECK(s.set.empty());
  }
  SUBCASE("zero maximal function") {
    const auto grid = uniform_nodes(0.0, 1.0, 4);
    const Sublevel s = sublevel_closed(maximal_function(Sampled1D::constant(grid, {0, 0, 0, 0})), 0.1);
    CHECK(s.set.complement_measure() == 0.0);
  }
}

TEST_CASE("interpolation across the gaps") {
  const auto grid = uniform_nodes(0.0, 3.0, 30);
  std::vector<double> v;
  for (double t : grid) v.push_back(t * t);
  const Sampled1D f = Sampled1D::linear(grid, v);
  SUBCASE("whole window") {
    const Sampled1D same = interpolate_L(f, ClosedSet1D(0.0, 3.0, {{0.0, 3.0}}));
    for (double t : grid) CHECK(same(t) == doctest::Approx(t * t));
  }
  SUBCASE("chord through (1, 1) and (2, 4)") {
    const Sampled1D fj = interpolate_L(f, ClosedSet1D(0.0, 3.0, {{0.0, 1.0}, {2.0, 3.0}}));
    for (double t : {1.1, 1.5, 1.9}) CHECK(fj(t) == doctest::Approx(3.0 * t - 2.0));
    CHECK(fj(1.0) == doctest::Approx(1.0));
    CHECK(fj(2.0) == doctest::Approx(4.0));
    CHECK(fj(2.5) == doctest::Approx(6.25));
  }
  SUBCASE("gap endpoints off the grid are preserved") {
    const ClosedSet1D e(0.0, 3.0, {{0.0, 0.33}, {0.77, 1.41}, {2.05, 3.0}});
    const Sampled1D fj = interpolate_L(f, e);
    for (double t : {0.33, 0.77, 1.41, 2.05}) CHECK(fj(t) == doctest::Approx(f(t)).epsilon(1e-14));
  }
}

TEST_CASE("Lipschitz approximation of sqrt") {
  const auto [f, g] = sqrt_pair(1024);
  std::vector<ApproximationReport> reps;
  for (int j = 4; j <= 256; j *= 2) reps.push_back(approximate_ac(f, g, j));
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    CAPTURE(r.j);
    CHECK(r.sup_error <= r.sup_bound);
    CHECK(r.l1_derivative_error <= r.l1_derivative_bound + 1e-12);
    CHECK(r.time_lipschitz <= 4.0 * r.j);
    CHECK(r.complement_ratio <= 2.0 + 1e-6);
    // the excluded set is an initial segment shrinking like 1/j^2
    REQUIRE(!r.e.gaps().empty());
    CHECK(r.e.gaps().front().lower == 0.0);
    if (i > 0) {
      CHECK(r.complement_measure <= reps[i - 1].complement_measure);
      CHECK(r.l1_derivative_error <= reps[i - 1].l1_derivative_error);
      for (const Interval& in : reps[i - 1].e.intervals()) CHECK(r.e.contains(0.5 * (in.lower + in.upper)));
    }
  }
}

TEST_CASE("approximation leaves Lipschitz and constant functions alone") {
  const auto grid = uniform_nodes(0.0, 1.0, 50);
  std::vector<double> lin, zero(50, 0.0), slope(50, 3.0);
  for (double t : grid) lin.push_back(3.0 * t);
  const ApproximationReport a = approximate_ac(Sampled1D::linear(grid, lin), Sampled1D::constant(grid, slope), 8);
  CHECK(a.e.complement_measure() == 0.0);
  CHECK(a.sup_error == 0.0);
  const ApproximationReport c =
      approximate_ac(Sampled1D::linear(grid, std::vector<double>(51, 2.0)), Sampled1D::constant(grid, zero), 1);
  CHECK(c.sup_error == 0.0);
}

TEST_CASE("AC in time, Lipschitz in space") {
  const auto [f, g] = sqrt_pair(512);
  std::vector<double> gx = g.values;
  for (double& v : gx) v *= std::exp(1.0);
  const Sampled1D upper = Sampled1D::constant(g.grid, gx);
  const ACLipFunction h([](double t, const Vec& x) { return x[0] * std::exp(std::sqrt(t)); }, upper, std::exp(1.0),
                        Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  std::vector<Vec> probes;
  for (double x : {-1.0, -0.3, 0.2, 0.7, 1.0}) probes.push_back(Vec::Constant(1, x));
  double prev = 1e300;
  for (int j = 4; j <= 64; j *= 2) {
    const ACLipApproximation a = approximate_ac_lip(h, j, probes);
    CHECK(a.agreement_on_e <= 1e-12);
    CHECK(a.sup_error <= prev);
    CHECK(a.lip_x_approx <= a.lip_x_original + 1e-12);
    CHECK(a.lip_x_original <= std::exp(1.0) + 1e-12);
    REQUIRE(!a.e.gaps().empty());
    CHECK(a.e.gaps().front().lower == 0.0);
    prev = a.sup_error;
  }
  CHECK_THROWS_AS(ACLipFunction([](double t, const Vec&) { return 10.0 * t; }, upper, 0.0, Vec::Constant(1, 0.0),
                                Vec::Constant(1, 1.0)),
                  Error);
}
