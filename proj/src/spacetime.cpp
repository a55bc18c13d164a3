#include <algorithm>
#include <cmath>

#include "gte/error.hpp"
#include "gte/transport.hpp"
#include "quadrature.hpp"

namespace gte {

namespace {

Vec lift(double t, const Vec& x) {
  Vec p(x.size() + 1);
  p[0] = t;
  p.tail(x.size()) = x;
  return p;
}

// tau in Lambda_k R^d viewed in Lambda_k R^{1+d} (index i -> i + 1).
MultiVector embed(const MultiVector& tau) {
  const int d = tau.dimension(), k = tau.grade();
  MultiVector out(d + 1, k);
  const auto masks = basis_masks(d, k);
  for (std::size_t i = 0; i < masks.size(); ++i)
    out[basis_position(d + 1, static_cast<IndexMask>(masks[i] << 1))] = tau[i];
  if (tau.witness()) {
    std::vector<Vec> w;
    for (const Vec& v : *tau.witness()) w.push_back(lift(0.0, v));
    out.set_witness(std::move(w));
  }
  return out;
}

// Slope of a piecewise linear sample on the cell containing t.
double slope_at(const Sampled1D& s, double t) {
  const auto it = std::upper_bound(s.grid.begin(), s.grid.end(), t);
  std::size_t i = it == s.grid.begin() ? 0 : static_cast<std::size_t>(it - s.grid.begin()) - 1;
  i = std::min(i, s.cells() - 1);
  return (s.values[i + 1] - s.values[i]) / (s.grid[i + 1] - s.grid[i]);
}

template <class F> double richardson(const F& f, double h) {
  const double d1 = (f(h) - f(-h)) / (2.0 * h);
  const double d2 = (f(0.5 * h) - f(-0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

DiracAtom push_atom(const DiracAtom& a, const Vec& value, const Mat& jac) {
  MultiVector tau = push_linear(jac, a.tau);
  if (a.tau.witness()) {
    std::vector<Vec> w;
    for (const Vec& v : *a.tau.witness()) w.push_back(jac * v);
    tau.set_witness(std::move(w));
  }
  return {value, std::move(tau), a.weight};
}

} // namespace

SpaceTimeCurrent::SpaceTimeCurrent(std::vector<double> times, std::vector<Current> slices, Drift drift)
    : times_(std::move(times)), slices_(std::move(slices)), drift_(std::move(drift)) {
  if (times_.size() < 2 || times_.size() != slices_.size())
    throw Error("space-time current needs one slice per grid node and at least two nodes");
  for (std::size_t i = 0; i + 1 < times_.size(); ++i)
    if (!(times_[i] < times_[i + 1])) throw Error("space-time grid must be strictly increasing");
  for (const Current& c : slices_)
    if (c.dimension() != slices_.front().dimension() || c.grade() != slices_.front().grade())
      throw Error("space-time slices differ in dimension or grade");
  if (space_dimension() + 1 > kMaxDimension) throw Error("space-time dimension out of range");
}

Vec SpaceTimeCurrent::drift(double t, const Vec& x) const {
  if (!drift_) return Vec::Zero(x.size());
  return drift_(t, x);
}

double SpaceTimeCurrent::mass_bound() const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    const Current& s = slices_[i];
    double speed = 0.0;
    for (const auto& a : s.atoms()) speed = std::max(speed, drift(times_[i], a.point).norm());
    for (const auto& v : s.vertices()) speed = std::max(speed, drift(times_[i], v).norm());
    total += (times_[i + 1] - times_[i]) * std::sqrt(1.0 + speed * speed) * mass(s);
  }
  return total;
}

namespace {

// Midpoint splits of the reference k-simplex, k in {1, 2}; each piece keeps
// the reference orientation.
std::vector<std::vector<Vec>> reference_pieces(int k, int levels) {
  std::vector<Vec> root{Vec::Zero(k)};
  for (int l = 0; l < k; ++l) root.push_back(Vec::Unit(k, l));
  std::vector<std::vector<Vec>> pieces{root};
  if (k < 1 || k > 2) return pieces;
  for (int level = 0; level < levels; ++level) {
    std::vector<std::vector<Vec>> next;
    for (const auto& p : pieces) {
      if (k == 1) {
        const Vec m = 0.5 * (p[0] + p[1]);
        next.push_back({p[0], m});
        next.push_back({m, p[1]});
      } else {
        const Vec ab = 0.5 * (p[0] + p[1]), ac = 0.5 * (p[0] + p[2]), bc = 0.5 * (p[1] + p[2]);
        next.push_back({p[0], ab, ac});
        next.push_back({ab, p[1], bc});
        next.push_back({ac, bc, p[2]});
        next.push_back({bc, ac, ab});
      }
    }
    pieces = std::move(next);
  }
  return pieces;
}

bool same_shape(const Current& a, const Current& b) {
  if (a.atoms().size() != b.atoms().size() || a.vertices().size() != b.vertices().size() ||
      a.simplices().size() != b.simplices().size())
    return false;
  for (std::size_t j = 0; j < a.simplices().size(); ++j)
    if (a.simplices()[j].vertices != b.simplices()[j].vertices) return false;
  return true;
}

} // namespace

Current SpaceTimeCurrent::to_atoms(int nodes_per_cell) const {
  const auto& rule = detail::gauss_rule(nodes_per_cell);
  const int d = space_dimension(), k = slice_grade();
  Current out(d + 1, k + 1);
  const SimplexRule& srule = simplex_rule(k);
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    const double a = times_[i], b = times_[i + 1];
    const Current& lo = slices_[i];
    const Current& hi = same_shape(lo, slices_[i + 1]) ? slices_[i + 1] : lo;
    double diam = 0.0;
    for (const Current* s : {&lo, &hi})
      for (const auto& sx : s->simplices())
        for (int v : sx.vertices)
          for (int w : sx.vertices) diam = std::max(diam, (s->vertices()[v] - s->vertices()[w]).norm());
    // spatial resolution comparable to the time step
    int levels = 0;
    while (levels < 6 && diam > (b - a)) {
      diam *= 0.5;
      ++levels;
    }
    const auto pieces = reference_pieces(k, k >= 1 && k <= 2 ? levels : 0);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[q];
      const double wt = 0.5 * (b - a) * rule.weights[q];
      const double theta = (t - a) / (b - a);
      auto add = [&](const Vec& x, const MultiVector& tau, double w) {
        MultiVector dir = MultiVector::vector(lift(1.0, drift(t, x)));
        out.add_atom({lift(t, x), wedge(dir, embed(tau)), wt * w});
      };
      for (std::size_t j = 0; j < lo.atoms().size(); ++j) {
        const auto& p = lo.atoms()[j];
        const auto& r = hi.atoms()[j];
        const Vec x = (1.0 - theta) * p.point + theta * r.point;
        if (&p == &r) {
          add(x, p.tau, p.weight);
          continue;
        }
        const auto& wp = p.tau.witness();
        const auto& wr = r.tau.witness();
        if (wp && wr && wp->size() == wr->size() && !wp->empty()) {
          // interpolate the factors so the orientation stays simple
          std::vector<Vec> f;
          for (std::size_t l = 0; l < wp->size(); ++l) f.push_back((1.0 - theta) * (*wp)[l] + theta * (*wr)[l]);
          add(x, MultiVector::from_vectors(f, d), (1.0 - theta) * p.weight + theta * r.weight);
        } else {
          add(x, (1.0 - theta) * (p.weight * p.tau) + theta * (r.weight * r.tau), 1.0);
        }
      }
      for (std::size_t j = 0; j < lo.simplices().size(); ++j) {
        const Simplex& sx = lo.simplices()[j];
        std::vector<Vec> v;
        for (int idx : sx.vertices) v.push_back((1.0 - theta) * lo.vertices()[idx] + theta * hi.vertices()[idx]);
        MultiVector tau = MultiVector::scalar(d, 1.0);
        if (k >= 1) {
          std::vector<Vec> edges;
          for (int l = 1; l <= k; ++l) edges.push_back(v[l] - v[0]);
          tau = MultiVector::from_vectors(edges, d);
        }
        for (const auto& piece : pieces) {
          double jac = 1.0;
          if (k >= 1) {
            Mat e(k, k);
            for (int l = 0; l < k; ++l) e.col(l) = piece[l + 1] - piece[0];
            jac = e.determinant();
          }
          for (std::size_t p = 0; p < srule.weights.size(); ++p) {
            Vec u = piece[0];
            for (int l = 0; l < k; ++l) u += srule.points[p][l] * (piece[l + 1] - piece[0]);
            Vec x = v[0];
            for (int l = 0; l < k; ++l) x += u[l] * (v[l + 1] - v[0]);
            add(x, tau, srule.weights[p] * jac * sx.multiplicity);
          }
        }
      }
    }
  }
  return out;
}

Current SpaceTimeCurrent::materialize() const {
  const int d = space_dimension(), k = slice_grade();
  const Current& first = slices_.front();
  const std::size_t nv = first.vertices().size();
  for (const Current& s : slices_) {
    if (s.has_atoms() && k > 0) throw Error("materialize: Dirac atoms of positive grade have no prism");
    if (s.vertices().size() != nv || s.simplices().size() != first.simplices().size() ||
        s.atoms().size() != first.atoms().size())
      throw Error("materialize: slices do not share combinatorics");
    for (std::size_t j = 0; j < s.simplices().size(); ++j)
      if (s.simplices()[j].vertices != first.simplices()[j].vertices)
        throw Error("materialize: slices do not share combinatorics");
  }
  Current out(d + 1, k + 1);
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    const Current& lo = slices_[i];
    const Current& hi = slices_[i + 1];
    for (std::size_t j = 0; j < lo.atoms().size(); ++j) {
      const auto& a = lo.atoms()[j];
      const double w = a.weight * a.tau[0];
      out.add_simplex({lift(times_[i], a.point), lift(times_[i + 1], hi.atoms()[j].point)}, w);
    }
    for (std::size_t j = 0; j < lo.simplices().size(); ++j) {
      const Simplex& sx = lo.simplices()[j];
      for (int step = 0; step <= k; ++step) {
        std::vector<Vec> pts;
        for (int l = 0; l <= step; ++l) pts.push_back(lift(times_[i], lo.vertices()[sx.vertices[l]]));
        for (int l = step; l <= k; ++l) pts.push_back(lift(times_[i + 1], hi.vertices()[sx.vertices[l]]));
        out.add_simplex(pts, (step % 2 == 0 ? 1.0 : -1.0) * sx.multiplicity);
      }
    }
  }
  return out;
}

SpaceTimeCurrent spacetime_cylinder(const Current& initial, const std::vector<double>& grid) {
  return constant_slices(initial, grid);
}

SpaceTimeCurrent constant_slices(const Current& initial, const std::vector<double>& grid,
                                 SpaceTimeCurrent::Drift drift) {
  return SpaceTimeCurrent(grid, std::vector<Current>(grid.size(), initial), std::move(drift));
}

ApproxSequenceReport approx_pushforward_sequence(const SpaceTimeMap& f, const SpaceTimeCurrent& current,
                                                 const std::vector<int>& js, const FormDictionary& dict,
                                                 int nodes_per_cell) {
  const int m = f.output_dimension();
  if (m < 1) throw Error("space-time map has no components");
  const Current atoms = current.to_atoms(nodes_per_cell);
  const int n = atoms.dimension();
  const int d = n - 1;
  if (dict.dimension != m || dict.grade != atoms.grade()) throw Error("dictionary does not match the pushed current");
  constexpr double kSpaceStep = 1e-4;

  // Probe layout per atom: x, then x +- h e_l for each spatial direction.
  std::vector<Vec> probes;
  for (const auto& a : atoms.atoms()) {
    const Vec x = a.point.tail(d);
    probes.push_back(x);
    for (int l = 0; l < d; ++l) {
      probes.push_back(x + kSpaceStep * Vec::Unit(d, l));
      probes.push_back(x - kSpaceStep * Vec::Unit(d, l));
    }
  }
  const std::size_t stride = 1 + 2 * static_cast<std::size_t>(d);

  ApproxSequenceReport rep;
  rep.js = js;

  // Direct pushforward of the atoms under f.
  rep.limit = Current(m, atoms.grade());
  for (const auto& a : atoms.atoms()) {
    const double t = a.point[0];
    const Vec x = a.point.tail(d);
    Vec value(m);
    Mat jac(m, n);
    for (int i = 0; i < m; ++i) {
      const auto& fi = f.components[i];
      value[i] = fi(t, x);
      const double ht = std::min({1e-3, t / 4.0, (1.0 - t) / 4.0});
      jac(i, 0) = richardson([&](double h) { return fi(t + h, x); }, ht);
      for (int l = 0; l < d; ++l)
        jac(i, l + 1) = richardson([&](double h) { return fi(t, x + h * Vec::Unit(d, l)); }, 1e-3);
    }
    rep.limit.add_atom(push_atom(a, value, jac));
  }

  for (int j : js) {
    if (j <= 0) throw Error("approximation index must be positive");
    // lines[i][p]: the j-th approximation of component i along probe p.
    std::vector<std::vector<Sampled1D>> lines(m);
    for (int i = 0; i < m; ++i) {
      const auto& fi = f.components[i];
      const Sublevel sub = sublevel_closed(maximal_function(fi.upper_gradient()), j);
      const ClosedSet1D e = sub.flagged ? sub.set.clamped() : sub.set;
      for (const Vec& x : probes) lines[i].push_back(interpolate_L(fi.line(x), e));
    }
    Current pushed(m, atoms.grade());
    for (std::size_t a = 0; a < atoms.atoms().size(); ++a) {
      const DiracAtom& at = atoms.atoms()[a];
      const double t = at.point[0];
      Vec value(m);
      Mat jac(m, n);
      for (int i = 0; i < m; ++i) {
        const auto& ls = lines[i];
        const std::size_t base = a * stride;
        value[i] = ls[base](t);
        jac(i, 0) = slope_at(ls[base], t);
        for (int l = 0; l < d; ++l)
          jac(i, l + 1) = (ls[base + 1 + 2 * l](t) - ls[base + 2 + 2 * l](t)) / (2.0 * kSpaceStep);
      }
      pushed.add_atom(push_atom(at, value, jac));
    }
    rep.distances.push_back(distance(pushed, rep.limit, dict));
    rep.pushed.push_back(std::move(pushed));
  }
  const std::size_t count = rep.distances.size();
  if (count > 0) {
    rep.final_distance = rep.distances.back();
    bool decreasing = count >= 2 && rep.distances.back() < rep.distances.front();
    for (std::size_t i = count / 2; decreasing && i + 1 < count; ++i)
      decreasing = rep.distances[i + 1] <= rep.distances[i] * (1.0 + 1e-9) + 1e-12;
    rep.eventually_decreasing = decreasing;
  }
  return rep;
}

} // namespace gte
