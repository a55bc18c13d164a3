#include "gte/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gte/error.hpp"
#include "quadrature.hpp"

namespace gte {

namespace {

Mat flow_jacobian(const FlowMap& flow, double s, double t, const Vec& x, bool& flagged) {
  const int d = static_cast<int>(x.size());
  Mat j(d, d);
  for (int c = 0; c < d; ++c) {
    const Vec e = Vec::Unit(d, c);
    const DirectionalDerivative dd = flow.flow_directional_derivative(s, t, x, e);
    if (!dd.converged) flagged = true;
    j.col(c) = dd.value;
  }
  return j;
}

MultiVector push_tau(const FlowMap& flow, double s, double t, const Vec& x, const MultiVector& tau, bool& flagged) {
  const int d = tau.dimension();
  const int k = tau.grade();
  if (k == 0) return tau;
  const auto& witness = tau.witness();
  if (witness && static_cast<int>(witness->size()) == k) {
    std::vector<Vec> pushed;
    pushed.reserve(k);
    for (const Vec& v : *witness) {
      const double n = v.norm();
      if (n == 0.0) {
        pushed.push_back(Vec::Zero(d));
        continue;
      }
      const DirectionalDerivative dd = flow.flow_directional_derivative(s, t, x, v / n);
      if (!dd.converged) flagged = true;
      pushed.push_back(n * dd.value);
    }
    return MultiVector::from_vectors(pushed, d);
  }
  return push_linear(flow_jacobian(flow, s, t, x, flagged), tau);
}

double max_edge_ratio(const std::vector<Vec>& before, const std::vector<Vec>& after) {
  double worst = 1.0;
  for (std::size_t a = 0; a < before.size(); ++a) {
    for (std::size_t b = a + 1; b < before.size(); ++b) {
      const double l0 = (before[a] - before[b]).norm();
      const double l1 = (after[a] - after[b]).norm();
      if (l0 == 0.0) continue;
      if (l1 == 0.0) return std::numeric_limits<double>::infinity();
      worst = std::max({worst, l1 / l0, l0 / l1});
    }
  }
  return worst;
}

struct BoundingBox {
  Vec lower, upper;
  bool empty = true;
  void include(const Vec& p) {
    if (empty) {
      lower = upper = p;
      empty = false;
      return;
    }
    lower = lower.cwiseMin(p);
    upper = upper.cwiseMax(p);
  }
};

BoundingBox bounding_box(const Current& t) {
  BoundingBox box;
  for (const auto& a : t.atoms()) box.include(a.point);
  for (const auto& s : t.simplices())
    for (int v : s.vertices) box.include(t.vertices()[v]);
  return box;
}

bool may_touch(const BoundingBox& box, const TestForm& w) {
  if (box.empty) return false;
  const Vec nearest = w.center().cwiseMax(box.lower).cwiseMin(box.upper);
  return (nearest - w.center()).norm() < w.radius();
}

// Time weights for one cutoff. The pairing term uses product integration:
// slope[i] = int L_i psi' for the nodal basis L_i, quadratic on cell pairs of a
// uniform grid with an even number of cells and linear otherwise, so constant
// data integrate to zero up to rounding. The Lie term, which may be singular
// where psi vanishes, uses the matching Simpson or trapezoid weight times
// psi(t_i).
struct CutoffWeights {
  std::vector<double> value;
  std::vector<double> slope;
};

CutoffWeights cutoff_weights(const std::vector<double>& grid, const TimeCutoff& psi) {
  const std::size_t n = grid.size();
  CutoffWeights cw{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (n < 2) return cw;
  const std::size_t cells = n - 1;
  const double h = (grid.back() - grid.front()) / static_cast<double>(cells);
  bool quadratic = cells % 2 == 0;
  for (std::size_t i = 0; quadratic && i < cells; ++i)
    quadratic = std::abs(grid[i + 1] - grid[i] - h) <= 1e-12 * (1.0 + std::abs(h));
  const std::size_t span = quadratic ? 2 : 1;
  const auto& rule = detail::gauss_rule(20);
  const double lo = psi.center() - psi.radius(), hi = psi.center() + psi.radius();
  const double piece = psi.radius() / 16.0;
  for (std::size_t i = 0; i + span < n; i += span) {
    for (std::size_t j = i; j <= i + span; ++j) {
      const double nodal = span == 2 ? (j == i + 1 ? 4.0 : 1.0) * h / 3.0 : 0.5 * (grid[i + 1] - grid[i]);
      cw.value[j] += nodal * psi.value(grid[j]);
    }
    for (std::size_t c = i; c < i + span; ++c) {
      const double a = std::max(grid[c], lo), b = std::min(grid[c + 1], hi);
      if (b <= a) continue;
      const int parts = static_cast<int>(std::ceil((b - a) / piece));
      for (int p = 0; p < parts; ++p) {
        const double pa = a + (b - a) * p / parts, pb = a + (b - a) * (p + 1) / parts;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
          const double t = 0.5 * (pa + pb) + 0.5 * (pb - pa) * rule.nodes[q];
          const double pd = 0.5 * (pb - pa) * rule.weights[q] * psi.derivative(t);
          for (std::size_t j = i; j <= i + span; ++j) {
            double basis = 1.0;
            for (std::size_t m = i; m <= i + span; ++m)
              if (m != j) basis *= (t - grid[m]) / (grid[j] - grid[m]);
            cw.slope[j] += basis * pd;
          }
        }
      }
    }
  }
  return cw;
}

// <T, w> and <L_b T, w> at one time.
struct NodeTerms {
  double pairing = 0.0;
  double lie = 0.0;
};

double near(const TestForm& w, const Current& t, const CurrentIntegrand& f) {
  return integrate_near(t, f, w.center(), w.radius());
}

double weak_lie_term(const Current& t, const BoundingBox& box, const VectorField& field, double time,
                     const TestForm& w, const TestForm& dw) {
  if (t.grade() >= 1 && t.has_atoms())
    throw Error("boundary not materializable for Dirac currents of positive grade; use smooth_weak_residual");
  if (!may_touch(box, w)) return 0.0;
  const int k = t.grade();
  const int d = t.dimension();
  double total = 0.0;
  if (k >= 1) {
    const Current bd = boundary(t);
    total -= near(w, bd, [&](const Vec& x, const MultiVector& tau) {
      if (!w.in_support(x)) return 0.0;
      return pair(wedge(MultiVector::vector(field.value(time, x)), tau), w.eval(x));
    });
  }
  if (k < d) {
    total -= near(w, t, [&](const Vec& x, const MultiVector& tau) {
      if (!dw.in_support(x)) return 0.0;
      return pair(wedge(MultiVector::vector(field.value(time, x)), tau), dw.eval(x));
    });
  }
  return total;
}

double smooth_lie_term(const Current& t, const BoundingBox& box, const VectorField& field, double time,
                       const TestForm& w, const SmoothRegion& region) {
  const SmoothRegion inside =
      region ? region : SmoothRegion([&field](double s, const Vec& x) { return field.jacobian(s, x).has_value(); });
  auto check = [&](const Vec& x) {
    if (!inside(time, x)) throw Error("support leaves the smooth region at t=" + std::to_string(time));
  };
  for (const auto& a : t.atoms()) check(a.point);
  for (const auto& v : t.vertices()) check(v);
  if (!may_touch(box, w)) return 0.0;
  const FormEvaluator lw = lie_derivative_form(w, field.at_time(time));
  // <L_b T, w> = -<T, L_b w>
  return -near(w, t, [&](const Vec& x, const MultiVector& tau) {
    if (!w.in_support(x)) return 0.0;
    return pair(tau, lw(x));
  });
}

double combine(const std::vector<NodeTerms>& terms, const CutoffWeights& cw) {
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) sum += cw.slope[i] * terms[i].pairing - cw.value[i] * terms[i].lie;
  return std::abs(sum);
}

std::vector<NodeTerms> node_terms(const Trajectory& traj, const VectorField& field, const TestForm& w,
                                  const TestForm* dw, const std::vector<CutoffWeights>& weights, ResidualKind kind,
                                  const SmoothRegion& region) {
  std::vector<NodeTerms> out(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    bool need_value = false, need_lie = false;
    for (const auto& cw : weights) {
      need_value = need_value || cw.slope[i] != 0.0;
      need_lie = need_lie || cw.value[i] != 0.0;
    }
    if (!need_value && !need_lie) continue;
    const Current& cur = traj.currents[i];
    const BoundingBox box = bounding_box(cur);
    if (may_touch(box, w))
      out[i].pairing = near(w, cur, [&w](const Vec& x, const MultiVector& tau) {
        return w.in_support(x) ? pair(tau, w.eval(x)) : 0.0;
      });
    if (!need_lie) continue;
    if (kind == ResidualKind::Weak)
      out[i].lie = weak_lie_term(cur, box, field, t, w, *dw);
    else
      out[i].lie = smooth_lie_term(cur, box, field, t, w, region);
  }
  return out;
}

} // namespace

Current pushforward(const FlowMap& flow, double s, double t, const Current& current, PushforwardOptions options) {
  const int d = current.dimension();
  const int k = current.grade();
  if (flow.field().dimension() != d) throw Error("pushforward: dimension mismatch");
  bool flagged = current.flagged();
  Current out(d, k);
  for (const auto& a : current.atoms()) {
    DiracAtom moved{flow.flow(s, t, a.point), push_tau(flow, s, t, a.point, a.tau, flagged), a.weight};
    out.add_atom(std::move(moved));
  }
  if (current.has_simplices()) {
    std::vector<Vec> moved(current.vertices().size());
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = flow.flow(s, t, current.vertices()[i]);
    std::vector<Simplex> kept;
    for (const auto& sx : current.simplices()) {
      std::vector<Vec> before, after;
      for (int v : sx.vertices) {
        before.push_back(current.vertices()[v]);
        after.push_back(moved[v]);
      }
      if (!options.refine_on_distortion || k == 0 || k > 2 || max_edge_ratio(before, after) <= 2.0) {
        kept.push_back(sx);
        continue;
      }
      Current piece(d, k);
      piece.add_simplex(before, sx.multiplicity);
      const Current fine = subdivide(piece);
      for (const auto& child : fine.simplices()) {
        std::vector<Vec> pts;
        for (int v : child.vertices) pts.push_back(flow.flow(s, t, fine.vertices()[v]));
        out.add_simplex(pts, child.multiplicity);
      }
    }
    out.add(Current::simplicial(k, std::move(moved), std::move(kept)));
  }
  out.set_flagged(flagged);
  return out;
}

Current push_linear(const Mat& a, const Current& current) {
  if (a.cols() != current.dimension()) throw Error("push_linear: dimension mismatch");
  const int m = static_cast<int>(a.rows());
  Current out(m, current.grade());
  for (const auto& at : current.atoms()) {
    MultiVector tau = push_linear(a, at.tau);
    if (at.tau.witness()) {
      std::vector<Vec> w;
      for (const Vec& v : *at.tau.witness()) w.push_back(a * v);
      tau.set_witness(std::move(w));
    }
    out.add_atom({a * at.point, std::move(tau), at.weight});
  }
  if (current.has_simplices()) {
    std::vector<Vec> verts;
    for (const Vec& v : current.vertices()) verts.push_back(a * v);
    out.add(Current::simplicial(current.grade(), std::move(verts), current.simplices()));
  }
  out.set_flagged(current.flagged());
  return out;
}

Current translate(const Current& current, const Vec& shift) {
  Current out(current.dimension(), current.grade());
  for (const auto& at : current.atoms()) out.add_atom({at.point + shift, at.tau, at.weight});
  if (current.has_simplices()) {
    std::vector<Vec> verts;
    for (const Vec& v : current.vertices()) verts.push_back(v + shift);
    out.add(Current::simplicial(current.grade(), std::move(verts), current.simplices()));
  }
  out.set_flagged(current.flagged());
  return out;
}

Trajectory solve_gte(const FlowMap& flow, const Current& initial, const std::vector<double>& grid) {
  Trajectory traj;
  traj.times = grid;
  const double m0 = mass(initial);
  const int k = initial.grade();
  for (double t : grid) {
    if (t < 0.0 || t > 1.0) throw Error("solve_gte: grid node outside [0, 1]");
    Current ct = pushforward(flow, t, initial);
    const double mt = mass(ct);
    const double bound = std::exp(k * flow.field().lip_integral(0.0, t)) * m0 * (1.0 + 1e-6) + 1e-12;
    if (mt > bound)
      throw Error("mass bound violated at t=" + std::to_string(t) + ": " + std::to_string(mt) + " > " +
                  std::to_string(bound));
    traj.mass_bound = std::max(traj.mass_bound, mt);
    traj.flagged = traj.flagged || ct.flagged();
    traj.currents.push_back(std::move(ct));
  }
  return traj;
}

std::vector<double> uniform_grid(int intervals) {
  if (intervals < 1) throw Error("uniform_grid: need at least one interval");
  std::vector<double> g(intervals + 1);
  for (int i = 0; i <= intervals; ++i) g[i] = static_cast<double>(i) / intervals;
  return g;
}

FormDerivatives::FormDerivatives(const FormDictionary& dict) {
  d.reserve(dict.forms.size());
  for (const auto& w : dict.forms) d.push_back(exterior_derivative(w));
}

double weak_residual(const Trajectory& traj, const VectorField& field, const TestForm& w, const TimeCutoff& psi) {
  const TestForm dw = exterior_derivative(w);
  const CutoffWeights cw = cutoff_weights(traj.times, psi);
  return combine(node_terms(traj, field, w, &dw, {cw}, ResidualKind::Weak, {}), cw);
}

double smooth_weak_residual(const Trajectory& traj, const VectorField& field, const TestForm& w,
                            const TimeCutoff& psi, const SmoothRegion& region) {
  const CutoffWeights cw = cutoff_weights(traj.times, psi);
  return combine(node_terms(traj, field, w, nullptr, {cw}, ResidualKind::Smooth, region), cw);
}

ResidualKind residual_kind_for(const Current& current) {
  if (current.grade() >= 1 && current.has_atoms()) return ResidualKind::Smooth;
  return ResidualKind::Weak;
}

ResidualReport residual_study(const FlowMap& flow, const Current& initial, const FormDictionary& dict,
                              const std::vector<int>& intervals, std::optional<ResidualKind> kind,
                              const SmoothRegion& region) {
  if (dict.forms.empty() || dict.cutoffs.empty()) throw Error("residual_study: empty dictionary");
  if (dict.grade != initial.grade() || dict.dimension != initial.dimension())
    throw Error("residual_study: dictionary does not match the current");
  ResidualReport rep;
  rep.kind = kind.value_or(residual_kind_for(initial));
  rep.dictionary_size = dict.forms.size();
  rep.intervals = intervals;
  std::optional<FormDerivatives> derivs;
  if (rep.kind == ResidualKind::Weak) derivs.emplace(dict);
  std::vector<double> steps;
  for (int n : intervals) {
    const Trajectory traj = solve_gte(flow, initial, uniform_grid(n));
    std::vector<CutoffWeights> weights;
    for (const auto& psi : dict.cutoffs) weights.push_back(cutoff_weights(traj.times, psi));
    double worst = 0.0;
    for (std::size_t f = 0; f < dict.forms.size(); ++f) {
      const TestForm* dw = derivs ? &derivs->d[f] : nullptr;
      const auto terms = node_terms(traj, flow.field(), dict.forms[f], dw, weights, rep.kind, region);
      for (std::size_t c = 0; c < dict.cutoffs.size(); ++c) {
        const double r = combine(terms, weights[c]);
        rep.rows.push_back({n, static_cast<int>(f), static_cast<int>(c), r});
        worst = std::max(worst, r);
      }
    }
    rep.max_residual.push_back(worst);
    steps.push_back(1.0 / n);
  }
  rep.quadrature_step = steps.empty() ? 0.0 : *std::min_element(steps.begin(), steps.end());
  rep.at_noise_floor = std::all_of(rep.max_residual.begin(), rep.max_residual.end(),
                                   [](double r) { return r <= ResidualReport::kNoiseFloor; });
  rep.slope = refinement_slope(steps, rep.max_residual, ResidualReport::kNoiseFloor);
  return rep;
}

std::optional<double> refinement_slope(const std::vector<double>& steps, const std::vector<double>& values,
                                       double floor) {
  if (steps.size() != values.size()) throw Error("refinement_slope: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (values[i] > floor && steps[i] > 0.0) {
      xs.push_back(std::log(steps[i]));
      ys.push_back(std::log(values[i]));
    }
  }
  if (xs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

} // namespace gte
