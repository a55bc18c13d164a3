#pragma once

#include <functional>
#include <vector>

#include "gte/exterior.hpp"
#include "gte/testforms.hpp"

namespace gte {

inline constexpr std::size_t kMaxCurrentPieces = 100000;

// w tau delta_x
struct DiracAtom {
  Vec point;
  MultiVector tau;
  double weight = 1.0;
};

// Oriented k-simplex [v_0, ..., v_k] (indices into the vertex list).
struct Simplex {
  std::vector<int> vertices;
  double multiplicity = 1.0;
};

// Finite sum of Dirac atoms and oriented simplices, all of one grade k in R^d.
class Current {
public:
  Current() = default;
  Current(int dimension, int grade);

  static Current dirac(const Vec& point, MultiVector tau, double weight = 1.0);
  static Current simplicial(int grade, std::vector<Vec> vertices, std::vector<Simplex> simplices);
  static Current zero(int dimension, int grade) { return Current(dimension, grade); }

  int dimension() const { return d_; }
  int grade() const { return k_; }
  bool flagged() const { return flagged_; }
  void set_flagged(bool f = true) { flagged_ = f; }

  const std::vector<DiracAtom>& atoms() const { return atoms_; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<Simplex>& simplices() const { return simplices_; }
  bool has_atoms() const { return !atoms_.empty(); }
  bool has_simplices() const { return !simplices_.empty(); }
  std::size_t pieces() const { return atoms_.size() + simplices_.size(); }

  void add_atom(DiracAtom atom);
  void add_simplex(const std::vector<Vec>& points, double multiplicity = 1.0);
  // Appends other's pieces scaled by s.
  void add(const Current& other, double s = 1.0);

  Current& operator+=(const Current& o) {
    add(o, 1.0);
    return *this;
  }
  Current& operator-=(const Current& o) {
    add(o, -1.0);
    return *this;
  }
  friend Current operator+(Current a, const Current& b) { return a += b; }
  friend Current operator-(Current a, const Current& b) { return a -= b; }
  friend Current operator*(double s, const Current& a);

  // Merges atoms at the same point and identical simplices (up to orientation),
  // cancelling opposite contributions exactly; drops zero pieces.
  Current compressed() const;

  // Orienting k-vector (v_1 - v_0) ^ ... ^ (v_k - v_0) of a simplex.
  MultiVector simplex_orientation(const Simplex& s) const;
  double simplex_volume(const Simplex& s) const;

private:
  void check_size() const;

  int d_ = 0;
  int k_ = 0;
  std::vector<DiracAtom> atoms_;
  std::vector<Vec> vertices_;
  std::vector<Simplex> simplices_;
  bool flagged_ = false;
};

// Integrand F(x, tau) over the current: atoms contribute w F(x, tau); simplices
// use a Gauss rule on the reference simplex with tau the simplex orientation.
using CurrentIntegrand = std::function<double(const Vec&, const MultiVector&)>;
double integrate(const Current& t, const CurrentIntegrand& f);

// Integral over the part of a current near B(center, radius), assuming f
// vanishes outside it. Simplices meeting the ball are split until their
// diameter is at most resolution * radius and, when tolerance > 0, until one
// more split changes a piece by at most tolerance.
struct ResolveOptions {
  double resolution = 0.125;
  double tolerance = 0.0;
  int max_depth = 10;
};
double integrate_near(const Current& t, const CurrentIntegrand& f, const Vec& center, double radius,
                      const ResolveOptions& options = {});

// Resolved to about 1e-13 per piece.
double evaluate(const Current& t, const TestForm& w);
double evaluate(const Current& t, const FormEvaluator& w, int form_grade);

// Alternating face sum; simplicial currents only, grade >= 1.
Current boundary(const Current& t);
// <T, d eta> without materializing the boundary.
double weak_boundary_eval(const Current& t, const TestForm& eta);

double mass(const Current& t);
// Values <T, w> over the dictionary forms.
std::vector<double> dictionary_values(const Current& t, const FormDictionary& dict);
// Test-form metric: max over the dictionary of |<S, w> - <T, w>|.
double distance(const Current& s, const Current& t, const FormDictionary& dict);

// Midpoint subdivision of every simplex (grades 0, 1, 2).
Current subdivide(const Current& t);

// Quadrature points (in barycentric-free coordinates u in the reference
// k-simplex) and weights summing to 1/k!.
struct SimplexRule {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
};
const SimplexRule& simplex_rule(int k);

// Uniform mass bound over a time grid of currents.
struct Trajectory {
  std::vector<double> times;
  std::vector<Current> currents;
  double mass_bound = 0.0;
  bool flagged = false;
};

} // namespace gte
