#include "gte/currents.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>

#include "gte/kernels.hpp"
#include "quadrature.hpp"

namespace gte {
namespace {

// Sum that cancels exact opposite pairs before accumulating, so contributions
// of the form a + b - a - b come out exactly zero.
double exact_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end(), [](double a, double b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a < b;
  });
  std::vector<double> rest;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && std::abs(v[j]) == std::abs(v[i])) ++j;
    // v[i..j) share |value|: negatives first, then positives
    std::size_t neg = i;
    while (neg < j && v[neg] < 0.0) ++neg;
    const std::size_t nn = neg - i, np = j - neg;
    const std::size_t keep_neg = nn > np ? nn - np : 0, keep_pos = np > nn ? np - nn : 0;
    for (std::size_t k = 0; k < keep_neg; ++k) rest.push_back(v[i]);
    for (std::size_t k = 0; k < keep_pos; ++k) rest.push_back(v[neg]);
    i = j;
  }
  double s = 0.0, c = 0.0;
  for (double x : rest) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

double atom_mass(const MultiVector& tau) {
  const int k = tau.grade(), d = tau.dimension();
  if (tau.witness()) return simple_mass(tau);
  if (k <= 1 || k >= d - 1 || d <= 3) {
    double s = 0.0;
    for (double c : tau.coefficients()) s += c * c;
    return std::sqrt(s);
  }
  throw Error("mass undefined without simple witness");
}

int permutation_parity(std::vector<int>& idx) {
  int parity = 0;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j)
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        parity ^= 1;
      }
  return parity;
}

SimplexRule build_rule(int k) {
  SimplexRule rule;
  if (k == 0) {
    rule.points.push_back({});
    rule.weights.push_back(1.0);
    return rule;
  }
  const int n = k <= 3 ? 4 : (k <= 5 ? 3 : 2);
  const auto& g = detail::gauss_rule(n);
  std::vector<int> idx(k, 0);
  for (;;) {
    // Collapsed coordinates u_i = xi_i prod_{j<i} (1 - xi_j), Jacobian
    // prod_i (1 - xi_i)^(k - 1 - i).
    std::vector<double> u(k);
    double w = 1.0, remaining = 1.0;
    for (int i = 0; i < k; ++i) {
      const double xi = 0.5 * (g.nodes[idx[i]] + 1.0);
      u[i] = remaining * xi;
      remaining *= 1.0 - xi;
      w *= 0.5 * g.weights[idx[i]] * std::pow(1.0 - xi, k - 1 - i);
    }
    rule.weights.push_back(w);
    rule.points.push_back(std::move(u));
    int j = 0;
    while (j < k && ++idx[j] == n) idx[j++] = 0;
    if (j == k) break;
  }
  return rule;
}

} // namespace

const SimplexRule& simplex_rule(int k) {
  if (k < 0 || k > kMaxDimension) throw Error("simplex grade out of range");
  static std::array<SimplexRule, kMaxDimension + 1> rules;
  static std::array<std::once_flag, kMaxDimension + 1> built;
  std::call_once(built[k], [k] { rules[k] = build_rule(k); });
  return rules[k];
}

Current::Current(int dimension, int grade) : d_(dimension), k_(grade) {
  if (dimension < 1 || dimension > kMaxDimension) throw Error("current dimension out of range");
  if (grade < 0 || grade > dimension) throw Error("current grade out of range");
}

Current Current::dirac(const Vec& point, MultiVector tau, double weight) {
  Current t(static_cast<int>(point.size()), tau.grade());
  t.add_atom({point, std::move(tau), weight});
  return t;
}

Current Current::simplicial(int grade, std::vector<Vec> vertices, std::vector<Simplex> simplices) {
  if (vertices.empty()) throw Error("simplicial current needs vertices");
  Current t(static_cast<int>(vertices.front().size()), grade);
  for (const Vec& v : vertices)
    if (v.size() != t.d_) throw Error("simplicial vertex dimension mismatch");
  for (const Simplex& s : simplices) {
    if (static_cast<int>(s.vertices.size()) != grade + 1) throw Error("simplex has the wrong number of vertices");
    for (int i : s.vertices)
      if (i < 0 || i >= static_cast<int>(vertices.size())) throw Error("simplex vertex index out of range");
  }
  t.vertices_ = std::move(vertices);
  t.simplices_ = std::move(simplices);
  t.check_size();
  return t;
}

void Current::check_size() const {
  if (pieces() > kMaxCurrentPieces) throw Error("current exceeds 100000 atoms/simplices");
}

void Current::add_atom(DiracAtom atom) {
  if (atom.point.size() != d_ || atom.tau.dimension() != d_) throw Error("atom dimension mismatch");
  if (atom.tau.grade() != k_) throw Error("atom grade mismatch");
  if (!atom.tau.witness() && k_ >= 2 && k_ <= d_ - 2) throw Error("non-simple orienting vector: witness required");
  atoms_.push_back(std::move(atom));
  check_size();
}

void Current::add_simplex(const std::vector<Vec>& points, double multiplicity) {
  if (static_cast<int>(points.size()) != k_ + 1) throw Error("simplex has the wrong number of vertices");
  Simplex s;
  s.multiplicity = multiplicity;
  for (const Vec& p : points) {
    if (p.size() != d_) throw Error("simplicial vertex dimension mismatch");
    s.vertices.push_back(static_cast<int>(vertices_.size()));
    vertices_.push_back(p);
  }
  simplices_.push_back(std::move(s));
  check_size();
}

void Current::add(const Current& other, double s) {
  if (d_ == 0) {
    d_ = other.d_;
    k_ = other.k_;
  }
  if (other.d_ == 0) return;
  if (other.d_ != d_ || other.k_ != k_) throw Error("cannot add currents of different shape");
  for (DiracAtom a : other.atoms_) {
    a.weight *= s;
    atoms_.push_back(std::move(a));
  }
  const int offset = static_cast<int>(vertices_.size());
  vertices_.insert(vertices_.end(), other.vertices_.begin(), other.vertices_.end());
  for (Simplex sx : other.simplices_) {
    for (int& i : sx.vertices) i += offset;
    sx.multiplicity *= s;
    simplices_.push_back(std::move(sx));
  }
  flagged_ = flagged_ || other.flagged_;
  check_size();
}

Current operator*(double s, const Current& a) {
  Current out(a.d_, a.k_);
  if (a.d_ == 0) return a;
  out.add(a, s);
  return out;
}

Current Current::compressed() const {
  if (d_ == 0) return *this;
  Current out(d_, k_);
  out.flagged_ = flagged_;

  std::map<std::vector<double>, std::vector<std::size_t>> by_point;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const Vec& p = atoms_[i].point;
    by_point[std::vector<double>(p.data(), p.data() + p.size())].push_back(i);
  }
  for (const auto& [key, members] : by_point) {
    if (members.size() == 1) {
      const DiracAtom& a = atoms_[members.front()];
      if (a.weight != 0.0 && !a.tau.is_zero()) out.atoms_.push_back(a);
      continue;
    }
    MultiVector tau(d_, k_);
    for (std::size_t c = 0; c < tau.size(); ++c) {
      std::vector<double> parts;
      for (std::size_t i : members) parts.push_back(atoms_[i].weight * atoms_[i].tau[c]);
      tau[c] = exact_sum(std::move(parts));
    }
    if (!tau.is_zero()) out.atoms_.push_back({atoms_[members.front()].point, std::move(tau), 1.0});
  }

  std::map<std::vector<double>, int> vertex_id;
  std::vector<int> remap(vertices_.size());
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vec& p = vertices_[i];
    auto [it, inserted] =
        vertex_id.emplace(std::vector<double>(p.data(), p.data() + p.size()), static_cast<int>(out.vertices_.size()));
    if (inserted) out.vertices_.push_back(p);
    remap[i] = it->second;
  }
  std::map<std::vector<int>, std::vector<double>> by_simplex;
  for (const Simplex& s : simplices_) {
    std::vector<int> idx;
    for (int v : s.vertices) idx.push_back(remap[v]);
    const int parity = permutation_parity(idx);
    by_simplex[idx].push_back(parity ? -s.multiplicity : s.multiplicity);
  }
  for (auto& [idx, parts] : by_simplex) {
    const double m = exact_sum(std::move(parts));
    if (m != 0.0) out.simplices_.push_back({idx, m});
  }
  return out;
}

MultiVector Current::simplex_orientation(const Simplex& s) const {
  std::vector<Vec> edges;
  for (int i = 1; i <= k_; ++i) edges.push_back(vertices_[s.vertices[i]] - vertices_[s.vertices[0]]);
  return MultiVector::from_vectors(edges, d_);
}

double Current::simplex_volume(const Simplex& s) const {
  double fact = 1.0;
  for (int i = 2; i <= k_; ++i) fact *= i;
  return simple_mass(simplex_orientation(s)) / fact;
}

double integrate(const Current& t, const CurrentIntegrand& f) {
  double sum = 0.0;
  for (const DiracAtom& a : t.atoms()) sum += a.weight * f(a.point, a.tau);
  if (!t.has_simplices()) return sum;
  const int k = t.grade(), d = t.dimension();
  const SimplexRule& rule = simplex_rule(k);
  Vec x(d);
  for (const Simplex& s : t.simplices()) {
    if (s.multiplicity == 0.0) continue;
    const MultiVector tau = k == 0 ? MultiVector::scalar(d, 1.0) : t.simplex_orientation(s);
    const Vec& v0 = t.vertices()[s.vertices[0]];
    double local = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      x = v0;
      for (int i = 0; i < k; ++i) x += rule.points[q][i] * (t.vertices()[s.vertices[i + 1]] - v0);
      local += rule.weights[q] * f(x, tau);
    }
    sum += s.multiplicity * local;
  }
  return sum;
}

namespace {

class NearIntegral {
public:
  NearIntegral(int k, int d, const CurrentIntegrand& f, const Vec& center, double radius, const ResolveOptions& o)
      : k_(k), d_(d), f_(f), center_(center), radius_(radius), o_(o) {}

  double piece(const std::vector<Vec>& p, int depth, const double* known) const {
    Vec lo = p[0], hi = p[0];
    double diam = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      lo = lo.cwiseMin(p[a]);
      hi = hi.cwiseMax(p[a]);
      for (std::size_t b = a + 1; b < p.size(); ++b) diam = std::max(diam, (p[a] - p[b]).norm());
    }
    if ((center_.cwiseMax(lo).cwiseMin(hi) - center_).norm() >= radius_) return 0.0;
    const bool splittable = k_ >= 1 && k_ <= 2 && depth < o_.max_depth;
    if (splittable && diam > o_.resolution * radius_) {
      double sum = 0.0;
      for (const auto& c : split(p)) sum += piece(c, depth + 1, nullptr);
      return sum;
    }
    const double coarse = known ? *known : rule(p);
    if (!splittable || !(o_.tolerance > 0.0)) return coarse;
    const auto children = split(p);
    std::vector<double> values;
    double fine = 0.0;
    for (const auto& c : children) {
      values.push_back(rule(c));
      fine += values.back();
    }
    if (std::abs(fine - coarse) <= o_.tolerance) return fine;
    double sum = 0.0;
    for (std::size_t i = 0; i < children.size(); ++i) sum += piece(children[i], depth + 1, &values[i]);
    return sum;
  }

private:
  double rule(const std::vector<Vec>& p) const {
    MultiVector tau = MultiVector::scalar(d_, 1.0);
    if (k_ >= 1) {
      std::vector<Vec> edges;
      for (int i = 1; i <= k_; ++i) edges.push_back(p[i] - p[0]);
      tau = MultiVector::from_vectors(edges, d_);
    }
    const SimplexRule& r = simplex_rule(k_);
    double sum = 0.0;
    Vec x(d_);
    for (std::size_t q = 0; q < r.weights.size(); ++q) {
      x = p[0];
      for (int i = 0; i < k_; ++i) x += r.points[q][i] * (p[i + 1] - p[0]);
      sum += r.weights[q] * f_(x, tau);
    }
    return sum;
  }

  std::vector<std::vector<Vec>> split(const std::vector<Vec>& p) const {
    if (k_ == 1) {
      const Vec m = 0.5 * (p[0] + p[1]);
      return {{p[0], m}, {m, p[1]}};
    }
    const Vec ab = 0.5 * (p[0] + p[1]), ac = 0.5 * (p[0] + p[2]), bc = 0.5 * (p[1] + p[2]);
    return {{p[0], ab, ac}, {ab, p[1], bc}, {ac, bc, p[2]}, {bc, ac, ab}};
  }

  int k_, d_;
  const CurrentIntegrand& f_;
  const Vec& center_;
  double radius_;
  const ResolveOptions& o_;
};

} // namespace

double integrate_near(const Current& t, const CurrentIntegrand& f, const Vec& center, double radius,
                      const ResolveOptions& options) {
  double sum = 0.0;
  for (const DiracAtom& a : t.atoms()) sum += a.weight * f(a.point, a.tau);
  const NearIntegral near(t.grade(), t.dimension(), f, center, radius, options);
  std::vector<Vec> pts;
  for (const Simplex& s : t.simplices()) {
    if (s.multiplicity == 0.0) continue;
    pts.clear();
    for (int v : s.vertices) pts.push_back(t.vertices()[v]);
    sum += s.multiplicity * near.piece(pts, 0, nullptr);
  }
  return sum;
}

double evaluate(const Current& t, const TestForm& w) {
  if (t.dimension() == 0) return 0.0;
  if (w.grade() != t.grade() || w.dimension() != t.dimension()) throw Error("current and form grades differ");
  ResolveOptions o;
  o.tolerance = 1e-13;
  o.max_depth = 14;
  return integrate_near(
      t,
      [&w](const Vec& x, const MultiVector& tau) {
        if (!w.in_support(x)) return 0.0;
        return pair(tau, w.eval(x));
      },
      w.center(), w.radius(), o);
}

double evaluate(const Current& t, const FormEvaluator& w, int form_grade) {
  if (t.dimension() == 0) return 0.0;
  if (form_grade != t.grade()) throw Error("current and form grades differ");
  return integrate(t, [&w](const Vec& x, const MultiVector& tau) { return pair(tau, w(x)); });
}

Current boundary(const Current& t) {
  if (t.grade() == 0) throw Error("boundary of a 0-current is not defined");
  if (t.has_atoms())
    throw Error("boundary not materializable for Dirac currents of positive grade; use smooth_weak_residual");
  std::vector<Simplex> faces;
  for (const Simplex& s : t.simplices())
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
      Simplex f;
      f.multiplicity = (i % 2) ? -s.multiplicity : s.multiplicity;
      for (std::size_t j = 0; j < s.vertices.size(); ++j)
        if (j != i) f.vertices.push_back(s.vertices[j]);
      faces.push_back(std::move(f));
    }
  if (t.vertices().empty()) return Current(t.dimension(), t.grade() - 1);
  return Current::simplicial(t.grade() - 1, t.vertices(), std::move(faces));
}

double weak_boundary_eval(const Current& t, const TestForm& eta) {
  if (t.grade() == 0) throw Error("weak boundary needs a current of positive grade");
  if (eta.grade() != t.grade() - 1) throw Error("boundary test form has the wrong grade");
  return evaluate(t, exterior_derivative(eta));
}

double mass(const Current& t) {
  if (t.dimension() == 0) return 0.0;
  const Current c = t.compressed();
  double m = 0.0;
  for (const DiracAtom& a : c.atoms()) m += std::abs(a.weight) * atom_mass(a.tau);
  for (const Simplex& s : c.simplices()) m += std::abs(s.multiplicity) * (c.grade() == 0 ? 1.0 : c.simplex_volume(s));
  return m;
}

std::vector<double> dictionary_values(const Current& t, const FormDictionary& dict) {
  std::vector<double> v;
  v.reserve(dict.forms.size());
  for (const TestForm& w : dict.forms) v.push_back(evaluate(t, w));
  return v;
}

double distance(const Current& s, const Current& t, const FormDictionary& dict) {
  const auto a = dictionary_values(s, dict);
  const auto b = dictionary_values(t, dict);
  return kernels::max_abs_diff(a, b);
}

Current subdivide(const Current& t) {
  if (t.grade() > 2) throw Error("subdivision is implemented for grades 0, 1 and 2");
  if (!t.has_simplices() || t.grade() == 0) return t;
  Current out(t.dimension(), t.grade());
  for (const DiracAtom& a : t.atoms()) out.add_atom(a);
  for (const Simplex& s : t.simplices()) {
    std::vector<Vec> v;
    for (int i : s.vertices) v.push_back(t.vertices()[i]);
    const double m = s.multiplicity;
    if (t.grade() == 1) {
      const Vec mid = 0.5 * (v[0] + v[1]);
      out.add_simplex({v[0], mid}, m);
      out.add_simplex({mid, v[1]}, m);
    } else {
      const Vec ab = 0.5 * (v[0] + v[1]), bc = 0.5 * (v[1] + v[2]), ca = 0.5 * (v[2] + v[0]);
      out.add_simplex({v[0], ab, ca}, m);
      out.add_simplex({ab, v[1], bc}, m);
      out.add_simplex({ca, bc, v[2]}, m);
      out.add_simplex({bc, ca, ab}, m);
    }
  }
  return out.compressed();
}

} // namespace gte
