#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gte/acreg.hpp"
#include "gte/currents.hpp"
#include "gte/flows.hpp"

namespace gte {

struct PushforwardOptions {
  // Subdivide a simplex once when an edge stretches or shrinks by more than 2x.
  bool refine_on_distortion = true;
};

// (Phi_t^s)_* T. Dirac atoms move to Phi_t^s(x) and carry the exterior power
// of the flow derivative along their witness; simplices move by vertices.
Current pushforward(const FlowMap& flow, double s, double t, const Current& current, PushforwardOptions options = {});
inline Current pushforward(const FlowMap& flow, double t, const Current& current, PushforwardOptions options = {}) {
  return pushforward(flow, 0.0, t, current, options);
}

// Pushforward under a linear map A (R^d -> R^m).
Current push_linear(const Mat& a, const Current& current);
Current translate(const Current& current, const Vec& shift);

// T_t = (Phi_t^0)_* T0 at the grid nodes; asserts the Gronwall mass bound.
Trajectory solve_gte(const FlowMap& flow, const Current& initial, const std::vector<double>& grid);

std::vector<double> uniform_grid(int intervals);

// Precomputed d w for every dictionary form.
struct FormDerivatives {
  std::vector<TestForm> d;
  explicit FormDerivatives(const FormDictionary& dict);
};

// |int <T_t, w> psi' - <L_{b_t} T_t, w> psi dt| with
// <L_b T, w> = -<b ^ dT, w> - <b ^ T, dw>. <T_t, w> is interpolated in time
// (quadratic on uniform grids with an even number of cells) and integrated
// against psi' to rounding; the Lie term uses Simpson or trapezoid weights.
double weak_residual(const Trajectory& traj, const VectorField& field, const TestForm& w, const TimeCutoff& psi);

// Open set where the field is smooth; defaults to "Jacobian defined".
using SmoothRegion = std::function<bool(double, const Vec&)>;

// |int <T_t, w> psi' + <T_t, L_{b_t} w> psi dt|, for currents whose boundary
// need not have finite mass.
double smooth_weak_residual(const Trajectory& traj, const VectorField& field, const TestForm& w,
                            const TimeCutoff& psi, const SmoothRegion& region = {});

enum class ResidualKind { Weak, Smooth };

struct ResidualRow {
  int intervals = 0;
  int form = 0;
  int cutoff = 0;
  double residual = 0.0;
};

struct ResidualReport {
  ResidualKind kind = ResidualKind::Weak;
  std::size_t dictionary_size = 0;
  std::vector<int> intervals;
  std::vector<double> max_residual;
  std::vector<ResidualRow> rows;
  double quadrature_step = 0.0;  // finest time step
  std::optional<double> slope;   // least-squares slope of log residual vs log step
  bool at_noise_floor = false;   // every residual below the floor
  static constexpr double kNoiseFloor = 1e-10;
};

// Weak for normal currents, smooth otherwise (Dirac atoms of positive grade).
ResidualKind residual_kind_for(const Current& current);

ResidualReport residual_study(const FlowMap& flow, const Current& initial, const FormDictionary& dict,
                              const std::vector<int>& intervals, std::optional<ResidualKind> kind = std::nullopt,
                              const SmoothRegion& region = {});

// Least-squares slope of log(value) against log(step), using entries above the floor.
std::optional<double> refinement_slope(const std::vector<double>& steps, const std::vector<double>& values,
                                       double floor);

// (k+1)-current in R^{1+d} given by time slices T_t with orientation
// (1, b_t(x)) ^ tau at every atom.
class SpaceTimeCurrent {
public:
  using Drift = std::function<Vec(double, const Vec&)>;

  SpaceTimeCurrent(std::vector<double> times, std::vector<Current> slices, Drift drift = {});

  const std::vector<double>& times() const { return times_; }
  const std::vector<Current>& slices() const { return slices_; }
  int space_dimension() const { return slices_.front().dimension(); }
  int slice_grade() const { return slices_.front().grade(); }
  Vec drift(double t, const Vec& x) const;
  double mass_bound() const;

  // Dirac atoms at (t_q, x) over Gauss nodes in each time cell. Consecutive
  // slices with the same combinatorics are interpolated linearly; otherwise
  // the slice at the start of the cell is used. Simplices are split until
  // their diameter is about the time step.
  Current to_atoms(int nodes_per_cell = 4) const;
  // Staircase prism triangulation between consecutive simplicial slices
  // sharing combinatorics.
  Current materialize() const;

private:
  std::vector<double> times_;
  std::vector<Current> slices_;
  Drift drift_;
};

// [0, 1] x T0 over the grid; T0 simplicial or a point mass.
SpaceTimeCurrent spacetime_cylinder(const Current& initial, const std::vector<double>& grid);
// Slice T_t = the same current for all t, at every grid node.
SpaceTimeCurrent constant_slices(const Current& initial, const std::vector<double>& grid,
                                 SpaceTimeCurrent::Drift drift = {});

// Component maps f^i(t, x) on R x R^d, each AC in t and Lipschitz in x.
struct SpaceTimeMap {
  std::vector<ACLipFunction> components;
  int output_dimension() const { return static_cast<int>(components.size()); }
};

struct ApproxSequenceReport {
  std::vector<int> js;
  std::vector<Current> pushed;   // (f_j)_* T
  Current limit;                 // f_* T from the pushforward formula
  std::vector<double> distances; // test-form distance to the limit
  bool eventually_decreasing = false;
  double final_distance = 0.0;
};

ApproxSequenceReport approx_pushforward_sequence(const SpaceTimeMap& f, const SpaceTimeCurrent& current,
                                                 const std::vector<int>& js, const FormDictionary& dict,
                                                 int nodes_per_cell = 4);

struct NonuniquenessOptions {
  std::vector<double> eps = {0.1, 0.05, 0.025, 0.0125};
  int intervals = 1024;
  double tolerance = 1e-10;
  std::size_t dictionary_size = 64;
  std::uint64_t seed = 1;
};

struct NonuniquenessReport {
  std::vector<double> eps;
  std::vector<double> residual_first;  // max smooth residual of T^{1,eps}
  std::vector<double> residual_second; // of T^{2,eps}
  std::vector<double> distance_first;  // max_t distance(T^{1,eps}_t, T^1_t)
  std::vector<double> distance_second; // max_t distance(T^{2,eps}_t, T^2_t)
  double initial_distance = 0.0;       // distance(T^1_0, T^2_0)
  double final_distance = 0.0;         // distance(T^1_1, T^2_1)
  double mass_difference = 0.0;        // mass(T^2_1 - T^1_1)
  bool residuals_ok = false;
  bool initial_ok = false;
  bool mass_ok = false;
  bool distances_ok = false;           // approximants converge as eps shrinks
  bool verdict = false;
};

NonuniquenessReport nonuniqueness_demo(const NonuniquenessOptions& options = {});

} // namespace gte
