#include "gte/acreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gte/error.hpp"
#include "gte/kernels.hpp"

namespace gte {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw Error("sampled function needs at least two nodes");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1])) throw Error("sample grid must be strictly increasing");
}

void check_density(const Sampled1D& g) {
  if (g.kind != Sampled1D::Kind::PiecewiseConstant) throw Error("maximal function needs a piecewise constant density");
  for (double v : g.values)
    if (v < 0.0 || !std::isfinite(v)) throw Error("density values must be finite and nonnegative");
}

std::vector<double> prefix_integral(const Sampled1D& g) {
  std::vector<double> p(g.grid.size(), 0.0);
  for (std::size_t i = 0; i < g.cells(); ++i) p[i + 1] = p[i] + g.values[i] * (g.grid[i + 1] - g.grid[i]);
  return p;
}

double slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t a, std::size_t q) {
  return (y[q] - y[a]) / (x[q] - x[a]);
}

// out[i] = max_{a < i} (y_i - y_a) / (x_i - x_a), using the lower convex hull
// of the points already swept and a binary search for the tangent from (x_i, y_i).
std::vector<double> left_sweep(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> out(n, kNegInf);
  std::vector<std::size_t> hull;
  hull.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!hull.empty()) {
      std::size_t lo = 0, hi = hull.size() - 1;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (slope(x, y, hull[mid + 1], i) > slope(x, y, hull[mid], i)) lo = mid + 1;
        else hi = mid;
      }
      out[i] = slope(x, y, hull[lo], i);
    }
    while (hull.size() >= 2) {
      const std::size_t p0 = hull[hull.size() - 2], p1 = hull.back();
      const double cross = (x[p1] - x[p0]) * (y[i] - y[p0]) - (y[p1] - y[p0]) * (x[i] - x[p0]);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(i);
  }
  return out;
}

Sampled1D node_function(const Sampled1D& g, std::vector<double> values) {
  return Sampled1D::linear(g.grid, std::move(values));
}

// Measure of {m > lambda} for m interpolated linearly between nodes.
double superlevel_measure(const Sampled1D& m, double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.cells(); ++i) {
    const double a = m.values[i], b = m.values[i + 1], h = m.grid[i + 1] - m.grid[i];
    if (a > lambda && b > lambda) total += h;
    else if (a > lambda || b > lambda) total += h * (std::max(a, b) - lambda) / std::abs(b - a);
  }
  return total;
}

double eval_linear(const std::vector<double>& grid, const std::vector<double>& values, double t) {
  if (t <= grid.front()) return values.front();
  if (t >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  if (t == grid[i]) return values[i];
  const double w = (t - grid[i]) / (grid[i + 1] - grid[i]);
  return values[i] + w * (values[i + 1] - values[i]);
}

double max_pair_ratio(const std::vector<double>& t, const std::vector<double>& v) {
  const std::size_t n = t.size();
  double best = 0.0;
  const auto ratio = [&](std::size_t a, std::size_t b) {
    if (t[a] == t[b]) return 0.0;
    return std::abs(v[a] - v[b]) / std::abs(t[a] - t[b]);
  };
  if (n <= 2000) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) best = std::max(best, ratio(a, b));
    return best;
  }
  for (std::size_t a = 0; a + 1 < n; ++a) best = std::max(best, ratio(a, a + 1));
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (int k = 0; k < 200000; ++k) best = std::max(best, ratio(pick(rng), pick(rng)));
  return best;
}

} // namespace

Sampled1D Sampled1D::linear(std::vector<double> grid, std::vector<double> values) {
  check_grid(grid);
  if (values.size() != grid.size()) throw Error("piecewise linear samples need one value per node");
  return {std::move(grid), std::move(values), Kind::PiecewiseLinear};
}

Sampled1D Sampled1D::constant(std::vector<double> grid, std::vector<double> cell_values) {
  check_grid(grid);
  if (cell_values.size() + 1 != grid.size()) throw Error("piecewise constant samples need one value per cell");
  return {std::move(grid), std::move(cell_values), Kind::PiecewiseConstant};
}

double Sampled1D::operator()(double t) const {
  if (kind == Kind::PiecewiseLinear) return eval_linear(grid, values, t);
  if (t < grid.front() || t > grid.back()) return 0.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const std::size_t i = std::min(static_cast<std::size_t>(it - grid.begin()) - 1, cells() - 1);
  return values[i];
}

double Sampled1D::integral(double a, double b) const {
  if (a > b) return -integral(b, a);
  a = std::max(a, grid.front());
  b = std::min(b, grid.back());
  if (!(a < b)) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < cells(); ++i) {
    const double lo = std::max(a, grid[i]), hi = std::min(b, grid[i + 1]);
    if (!(lo < hi)) continue;
    if (kind == Kind::PiecewiseConstant) sum += values[i] * (hi - lo);
    else sum += 0.5 * (eval_linear(grid, values, lo) + eval_linear(grid, values, hi)) * (hi - lo);
  }
  return sum;
}

double Sampled1D::total_integral() const { return integral(grid.front(), grid.back()); }

ClosedSet1D::ClosedSet1D(double window_lower, double window_upper, std::vector<Interval> intervals)
    : lo_(window_lower), hi_(window_upper) {
  if (!(lo_ < hi_)) throw Error("closed set window must have positive length");
  std::sort(intervals.begin(), intervals.end(), [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
  for (Interval iv : intervals) {
    if (iv.upper < iv.lower) throw Error("interval bounds reversed");
    iv.lower = std::max(iv.lower, lo_);
    iv.upper = std::min(iv.upper, hi_);
    if (iv.upper < iv.lower) continue;
    if (!parts_.empty() && iv.lower <= parts_.back().upper) parts_.back().upper = std::max(parts_.back().upper, iv.upper);
    else parts_.push_back(iv);
  }
  double cursor = lo_;
  for (const Interval& iv : parts_) {
    if (iv.lower > cursor) gaps_.push_back({cursor, iv.lower});
    cursor = iv.upper;
  }
  if (parts_.empty()) gaps_.push_back({lo_, hi_});
  else if (cursor < hi_) gaps_.push_back({cursor, hi_});
}

bool ClosedSet1D::contains(double t) const {
  for (const Interval& iv : parts_)
    if (t >= iv.lower && t <= iv.upper) return true;
  return false;
}

double ClosedSet1D::measure() const {
  double m = 0.0;
  for (const Interval& iv : parts_) m += iv.length();
  return m;
}

double ClosedSet1D::complement_measure() const { return (hi_ - lo_) - measure(); }

ClosedSet1D ClosedSet1D::clamped() const {
  std::vector<Interval> parts = parts_;
  parts.push_back({lo_, lo_});
  parts.push_back({hi_, hi_});
  return ClosedSet1D(lo_, hi_, std::move(parts));
}

Sampled1D maximal_function(const Sampled1D& g) {
  check_density(g);
  const std::vector<double> p = prefix_integral(g);
  const std::vector<double> left = left_sweep(g.grid, p);
  const std::size_t n = p.size();
  std::vector<double> mx(n), my(n);
  for (std::size_t i = 0; i < n; ++i) {
    mx[i] = -g.grid[n - 1 - i];
    my[i] = -p[n - 1 - i];
  }
  const std::vector<double> right = left_sweep(mx, my);
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = std::max(left[i], right[n - 1 - i]);
  return node_function(g, std::move(m));
}

Sampled1D maximal_function_reference(const Sampled1D& g) {
  check_density(g);
  const std::vector<double> p = prefix_integral(g);
  const std::vector<double>& t = g.grid;
  const std::size_t n = p.size();
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = kernels::max_slope_to(t[i], p[i], {t.data(), i}, {p.data(), i});
    const double right = kernels::max_slope_to(t[i], p[i], {t.data() + i + 1, n - i - 1}, {p.data() + i + 1, n - i - 1});
    m[i] = std::max(left, right);
  }
  return node_function(g, std::move(m));
}

Sampled1D maximal_function_brute_force(const Sampled1D& g) {
  check_density(g);
  const std::vector<double> p = prefix_integral(g);
  const std::size_t n = p.size();
  std::vector<double> m(n, kNegInf);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double avg = (p[b] - p[a]) / (g.grid[b] - g.grid[a]);
      for (std::size_t i = a; i <= b; ++i) m[i] = std::max(m[i], avg);
    }
  return node_function(g, std::move(m));
}

Sublevel sublevel_closed(const Sampled1D& mg, double lambda) {
  if (!(lambda > 0.0)) throw Error("sublevel threshold must be positive");
  std::vector<Interval> parts;
  const auto& t = mg.grid;
  const auto& m = mg.values;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double a = m[i], b = m[i + 1];
    const bool in_a = a <= lambda, in_b = b <= lambda;
    if (in_a && in_b) {
      parts.push_back({t[i], t[i + 1]});
    } else if (in_a) {
      const double c = t[i] + (lambda - a) / (b - a) * (t[i + 1] - t[i]);
      parts.push_back({t[i], std::min(c, t[i + 1])});
    } else if (in_b) {
      const double c = t[i] + (a - lambda) / (a - b) * (t[i + 1] - t[i]);
      parts.push_back({std::max(c, t[i]), t[i + 1]});
    }
  }
  Sublevel out{ClosedSet1D(t.front(), t.back(), std::move(parts)), false};
  out.flagged = out.set.empty();
  return out;
}

double weak_type_constant(const Sampled1D& mg, const Sampled1D& g) {
  const double norm = g.total_integral();
  if (norm <= 0.0) return 0.0;
  std::vector<double> levels;
  for (double v : mg.values)
    if (v > 0.0 && std::isfinite(v)) levels.push_back(v);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  if (levels.size() > 1024) {
    std::vector<double> thinned;
    for (std::size_t k = 0; k < 1024; ++k) thinned.push_back(levels[k * (levels.size() - 1) / 1023]);
    levels = std::move(thinned);
  }
  double best = 0.0;
  for (double lambda : levels) best = std::max(best, lambda * superlevel_measure(mg, lambda) / norm);
  return best;
}

Sampled1D interpolate_L(const Sampled1D& f, const ClosedSet1D& e) {
  if (f.kind != Sampled1D::Kind::PiecewiseLinear) throw Error("interpolation needs a piecewise linear function");
  if (e.empty()) throw Error("interpolation needs a nonempty closed set");
  const ClosedSet1D set = e.clamped();
  std::vector<double> grid = f.grid;
  for (const Interval& gap : set.gaps()) {
    grid.push_back(gap.lower);
    grid.push_back(gap.upper);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> values(grid.size());
  const auto& gaps = set.gaps();
  std::size_t g = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = grid[i];
    while (g < gaps.size() && gaps[g].upper <= u) ++g;
    if (g < gaps.size() && gaps[g].lower < u && u < gaps[g].upper) {
      const double r = gaps[g].lower, s = gaps[g].upper;
      const double fr = f(r), fs = f(s);
      values[i] = fr + (fs - fr) * (u - r) / (s - r);
    } else {
      values[i] = f(u);
    }
  }
  return Sampled1D::linear(std::move(grid), std::move(values));
}

ApproximationReport approximate_ac(const Sampled1D& f, const Sampled1D& g, int j) {
  if (j <= 0) throw Error("approximation index must be positive");
  if (f.kind != Sampled1D::Kind::PiecewiseLinear || g.kind != Sampled1D::Kind::PiecewiseConstant || f.grid != g.grid)
    throw Error("f and g must share a grid (f piecewise linear, g piecewise constant)");
  for (std::size_t i = 0; i < g.cells(); ++i)
    if (std::abs(f.values[i + 1] - f.values[i]) > g.values[i] * (g.grid[i + 1] - g.grid[i]) + 1e-10)
      throw Error("g is not an upper gradient of f");

  const Sampled1D mg = maximal_function(g);
  Sublevel sub = sublevel_closed(mg, j);
  ApproximationReport r;
  r.j = j;
  r.e = sub.set;
  r.flagged = sub.flagged;
  const ClosedSet1D usable = sub.flagged ? sub.set.clamped() : sub.set;
  r.fj = interpolate_L(f, usable);
  r.complement_measure = sub.set.complement_measure();
  const double norm = g.total_integral();
  r.weak_constant = weak_type_constant(mg, g);
  r.complement_ratio = norm > 0.0 ? j * r.complement_measure / norm : 0.0;

  double gap_mass = 0.0;
  const ClosedSet1D clamped = usable.clamped();
  for (const Interval& gap : clamped.gaps()) gap_mass = std::max(gap_mass, g.integral(gap.lower, gap.upper));
  r.sup_bound = 2.0 * gap_mass;

  const auto& u = r.fj.grid;
  std::vector<double> fu(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    fu[i] = f(u[i]);
    r.sup_error = std::max(r.sup_error, std::abs(r.fj.values[i] - fu[i]));
  }
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double h = u[i + 1] - u[i];
    const double sf = (fu[i + 1] - fu[i]) / h;
    const double sj = (r.fj.values[i + 1] - r.fj.values[i]) / h;
    r.l1_derivative_error += std::abs(sj - sf) * h;
    r.time_lipschitz = std::max(r.time_lipschitz, std::abs(sj));
    if (!sub.set.contains(0.5 * (u[i] + u[i + 1]))) r.l1_derivative_bound += 2.0 * std::abs(sf) * h;
  }

  std::vector<double> te, fe;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (sub.set.contains(u[i])) {
      te.push_back(u[i]);
      fe.push_back(fu[i]);
    }
  r.lipschitz_on_e = max_pair_ratio(te, fe);
  return r;
}

ACLipFunction::ACLipFunction(Evaluator f, Sampled1D g, double lip_x, Vec x_lower, Vec x_upper, std::uint64_t seed,
                             int checks)
    : f_(std::move(f)), g_(std::move(g)), lip_x_(lip_x) {
  check_density(g_);
  if (!(lip_x >= 0.0)) throw Error("spatial Lipschitz constant must be nonnegative");
  if (x_lower.size() != x_upper.size()) throw Error("probe box dimension mismatch");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw_x = [&] {
    Vec x(x_lower.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = x_lower[i] + unit(rng) * (x_upper[i] - x_lower[i]);
    return x;
  };
  const double t0 = g_.lower(), t1 = g_.upper();
  for (int k = 0; k < checks; ++k) {
    const double s = t0 + unit(rng) * (t1 - t0), t = t0 + unit(rng) * (t1 - t0);
    const Vec x = draw_x(), y = draw_x();
    const double lhs = std::abs(f_(t, x) - f_(s, y));
    const double rhs = lip_x_ * (x - y).norm() + std::abs(g_.integral(s, t));
    if (lhs > rhs + 1e-10 * (1.0 + rhs)) throw Error("g is not an upper gradient of f");
  }
}

Sampled1D ACLipFunction::line(const Vec& x) const {
  std::vector<double> v(g_.grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f_(g_.grid[i], x);
  return Sampled1D::linear(g_.grid, std::move(v));
}

ACLipApproximation approximate_ac_lip(const ACLipFunction& f, int j, const std::vector<Vec>& probes) {
  if (j <= 0) throw Error("approximation index must be positive");
  const Sampled1D& g = f.upper_gradient();
  const Sampled1D mg = maximal_function(g);
  Sublevel sub = sublevel_closed(mg, j);
  ACLipApproximation out;
  out.j = j;
  out.e = sub.set;
  out.probes = probes;
  const ClosedSet1D usable = sub.flagged ? sub.set.clamped() : sub.set;
  std::vector<Sampled1D> originals;
  for (const Vec& x : probes) {
    Sampled1D line = f.line(x);
    for (std::size_t i = 0; i < g.cells(); ++i)
      if (std::abs(line.values[i + 1] - line.values[i]) > g.values[i] * (g.grid[i + 1] - g.grid[i]) + 1e-10)
        throw Error("g is not an upper gradient of f");
    Sampled1D fj = interpolate_L(line, usable);
    for (std::size_t i = 0; i < fj.grid.size(); ++i) {
      const double fu = line(fj.grid[i]);
      out.sup_error = std::max(out.sup_error, std::abs(fj.values[i] - fu));
      if (i + 1 < fj.grid.size())
        out.time_lipschitz = std::max(out.time_lipschitz, std::abs((fj.values[i + 1] - fj.values[i]) /
                                                                   (fj.grid[i + 1] - fj.grid[i])));
    }
    for (std::size_t i = 0; i < g.grid.size(); ++i)
      if (sub.set.contains(g.grid[i]))
        out.agreement_on_e = std::max(out.agreement_on_e, std::abs(fj(g.grid[i]) - line.values[i]));
    out.lines.push_back(std::move(fj));
    originals.push_back(std::move(line));
  }
  for (std::size_t p = 0; p < probes.size(); ++p)
    for (std::size_t q = p + 1; q < probes.size(); ++q) {
      const double dist = (probes[p] - probes[q]).norm();
      if (dist == 0.0) continue;
      for (std::size_t i = 0; i < out.lines[p].grid.size(); ++i)
        out.lip_x_approx = std::max(out.lip_x_approx, std::abs(out.lines[p].values[i] - out.lines[q].values[i]) / dist);
      for (std::size_t i = 0; i < originals[p].grid.size(); ++i)
        out.lip_x_original =
            std::max(out.lip_x_original, std::abs(originals[p].values[i] - originals[q].values[i]) / dist);
    }
  return out;
}

} // namespace gte
