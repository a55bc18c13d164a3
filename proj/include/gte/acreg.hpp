#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gte/exterior.hpp"

namespace gte {

// Samples on a strictly increasing grid. Piecewise linear samples carry one
// value per node; piecewise constant samples carry one value per cell.
struct Sampled1D {
  enum class Kind { PiecewiseLinear, PiecewiseConstant };

  std::vector<double> grid;
  std::vector<double> values;
  Kind kind = Kind::PiecewiseLinear;

  static Sampled1D linear(std::vector<double> grid, std::vector<double> values);
  static Sampled1D constant(std::vector<double> grid, std::vector<double> cell_values);

  std::size_t cells() const { return grid.empty() ? 0 : grid.size() - 1; }
  double lower() const { return grid.front(); }
  double upper() const { return grid.back(); }
  double operator()(double t) const; // value at t (0 outside the window for constant samples)
  double integral(double a, double b) const;
  double total_integral() const;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double length() const { return upper - lower; }
};

// Finite union of disjoint closed intervals inside a window, together with
// the open gaps that make up its complement.
class ClosedSet1D {
public:
  ClosedSet1D() : ClosedSet1D(0.0, 1.0, {}) {}
  ClosedSet1D(double window_lower, double window_upper, std::vector<Interval> intervals);

  double window_lower() const { return lo_; }
  double window_upper() const { return hi_; }
  const std::vector<Interval>& intervals() const { return parts_; }
  // Open gaps (r, s); a gap touching the window edge has that edge as endpoint.
  const std::vector<Interval>& gaps() const { return gaps_; }
  bool empty() const { return parts_.empty(); }
  bool contains(double t) const;
  double measure() const;
  double complement_measure() const;
  // Adds the window endpoints to the set.
  ClosedSet1D clamped() const;

private:
  double lo_, hi_;
  std::vector<Interval> parts_;
  std::vector<Interval> gaps_;
};

// Uncentered maximal function at the nodes over grid-aligned intervals,
// via the O(N log N) convex-hull scan.
Sampled1D maximal_function(const Sampled1D& g);
// O(N^2) reference over all endpoint pairs.
Sampled1D maximal_function_reference(const Sampled1D& g);
// O(N^3) average over every grid-aligned interval; for cross-checks only.
Sampled1D maximal_function_brute_force(const Sampled1D& g);

struct Sublevel {
  ClosedSet1D set;
  bool flagged = false; // lambda below min Mg: the set is empty
};

// {Mg <= lambda} with Mg interpolated linearly between nodes.
Sublevel sublevel_closed(const Sampled1D& mg, double lambda);

// sup_lambda lambda |{Mg > lambda}| / ||g||_1, over the node values of Mg.
double weak_type_constant(const Sampled1D& mg, const Sampled1D& g);

// Equals f on E and interpolates linearly across each gap; the result lives
// on the union of f's grid and the gap endpoints.
Sampled1D interpolate_L(const Sampled1D& f, const ClosedSet1D& e);

struct ApproximationReport {
  int j = 0;
  Sampled1D fj;
  ClosedSet1D e;
  double complement_measure = 0.0;
  double weak_constant = 0.0;    // empirical weak (1,1) constant of Mg
  double complement_ratio = 0.0; // j |E_j^c| / ||g||_1
  double sup_error = 0.0;        // ||f_j - f||_inf
  double sup_bound = 0.0;        // 2 max_l int_{I_l} g
  double l1_derivative_error = 0.0;
  double l1_derivative_bound = 0.0; // 2 int_{E^c} |f'|
  double lipschitz_on_e = 0.0;      // max |f(t) - f(t')| / |t - t'| over sampled pairs in E
  double time_lipschitz = 0.0;      // max slope of f_j
  bool flagged = false;
};

// Lipschitz approximation of an AC function f with upper gradient g, both on
// the same grid.
ApproximationReport approximate_ac(const Sampled1D& f, const Sampled1D& g, int j);

// f(t, x) that is AC in t with a shared upper gradient g and Lipschitz in x.
class ACLipFunction {
public:
  using Evaluator = std::function<double(double, const Vec&)>;

  // Spot-checks the defining inequality on random quadruples drawn from the
  // window and the box [x_lower, x_upper].
  ACLipFunction(Evaluator f, Sampled1D g, double lip_x, Vec x_lower, Vec x_upper, std::uint64_t seed = 7,
                int checks = 256);

  double operator()(double t, const Vec& x) const { return f_(t, x); }
  const Sampled1D& upper_gradient() const { return g_; }
  double lip_x() const { return lip_x_; }
  Sampled1D line(const Vec& x) const; // f_x on the grid of g

private:
  Evaluator f_;
  Sampled1D g_;
  double lip_x_;
};

struct ACLipApproximation {
  int j = 0;
  ClosedSet1D e;
  std::vector<Vec> probes;
  std::vector<Sampled1D> lines; // f_j(., x) per probe
  double lip_x_approx = 0.0;    // measured over probe pairs and grid nodes
  double lip_x_original = 0.0;  // same measurement for f
  double time_lipschitz = 0.0;
  double agreement_on_e = 0.0;  // max |f_j - f| at grid nodes in E
  double sup_error = 0.0;
};

ACLipApproximation approximate_ac_lip(const ACLipFunction& f, int j, const std::vector<Vec>& probes);

} // namespace gte
