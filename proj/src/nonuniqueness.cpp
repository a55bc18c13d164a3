#include <algorithm>
#include <cmath>

#include "gte/error.hpp"
#include "gte/transport.hpp"

namespace gte {

namespace {

Current vertical_atom(const Vec& point, double lean) {
  Vec v(2);
  v << lean, 1.0;
  return Current::dirac(point, MultiVector::vector(v));
}

double max_residual(const Trajectory& traj, const VectorField& field, const FormDictionary& dict) {
  double worst = 0.0;
  for (const auto& w : dict.forms)
    for (const auto& psi : dict.cutoffs) worst = std::max(worst, smooth_weak_residual(traj, field, w, psi));
  return worst;
}

bool shrinking(const std::vector<double>& v) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (v[i + 1] > v[i] * (1.0 + 1e-9)) return false;
  return true;
}

} // namespace

NonuniquenessReport nonuniqueness_demo(const NonuniquenessOptions& options) {
  if (options.eps.empty()) throw Error("nonuniqueness demo needs at least one eps");
  for (double e : options.eps)
    if (!(e > 0.0)) throw Error("nonuniqueness eps must be positive");
  Box box{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)};
  const FlowMap flow(make_shear_field(box), options.tolerance);

  DictionaryOptions dopt;
  dopt.dimension = 2;
  dopt.grade = 1;
  dopt.size = options.dictionary_size;
  dopt.seed = options.seed;
  dopt.lattice_lower = Vec::Constant(2, -1.0);
  dopt.lattice_upper = Vec::Constant(2, 1.0);
  const FormDictionary dict = make_dictionary(dopt);

  const Vec origin = Vec::Zero(2);
  const std::vector<double> grid = uniform_grid(options.intervals);
  const std::size_t stride = std::max<std::size_t>(1, grid.size() / 64);

  NonuniquenessReport rep;
  rep.eps = options.eps;
  for (double e : options.eps) {
    for (int which = 0; which < 2; ++which) {
      const Vec start = Vec::Unit(2, 1) * (which == 0 ? -e : e);
      const Trajectory traj = solve_gte(flow, vertical_atom(start, 0.0), grid);
      const double res = max_residual(traj, flow.field(), dict);
      double dist = 0.0;
      for (std::size_t i = 0; i < grid.size(); i += stride) {
        const Current limit = vertical_atom(origin, which == 0 ? 0.0 : grid[i]);
        dist = std::max(dist, distance(traj.currents[i], limit, dict));
      }
      (which == 0 ? rep.residual_first : rep.residual_second).push_back(res);
      (which == 0 ? rep.distance_first : rep.distance_second).push_back(dist);
    }
  }
  rep.initial_distance = distance(vertical_atom(origin, 0.0), vertical_atom(origin, 0.0), dict);
  const Current first_end = vertical_atom(origin, 0.0);
  const Current second_end = vertical_atom(origin, 1.0);
  rep.final_distance = distance(first_end, second_end, dict);
  rep.mass_difference = mass((second_end - first_end).compressed());

  rep.residuals_ok = *std::max_element(rep.residual_first.begin(), rep.residual_first.end()) <= 1e-10 &&
                     *std::max_element(rep.residual_second.begin(), rep.residual_second.end()) <= 1e-6;
  rep.initial_ok = rep.initial_distance <= 1e-12;
  rep.mass_ok = std::abs(rep.mass_difference - 1.0) <= 1e-9;
  rep.distances_ok = shrinking(rep.distance_first) && shrinking(rep.distance_second) &&
                     rep.distance_first.back() < rep.final_distance && rep.distance_second.back() < rep.final_distance;
  rep.verdict = rep.residuals_ok && rep.initial_ok && rep.mass_ok && rep.distances_ok && rep.final_distance > 0.0;
  return rep;
}

} // namespace gte
