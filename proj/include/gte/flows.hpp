#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gte/exterior.hpp"
#include "gte/testforms.hpp"

namespace gte {

struct Box {
  Vec lower;
  Vec upper;

  int dimension() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& x) const;
  Box inflated(double margin) const;
  std::vector<Vec> corners() const;
};

enum class FieldFamily { Zero, Constant, Linear, TimeModulated, Shear, Mollified, Gridded };

const char* family_name(FieldFamily f);

// Scalar time modulation a(t) of the affine families.
enum class TimeProfile {
  One,     // 1
  Sine,    // 1 + sin(2 pi t) / 2
  InvSqrt, // 1 / (2 sqrt(t)), integrable, unbounded at 0
  InvLinear, // 1 / t, not integrable; exists to exercise the class check
};

const char* profile_name(TimeProfile p);
double profile_value(TimeProfile p, double t);
double profile_integral(TimeProfile p, double a, double b);

// Time-dependent vector field b(t, x) on R^d together with the spatial
// Lipschitz constant and the sup-norm over the bounding box per time.
class VectorField {
public:
  virtual ~VectorField() = default;

  virtual FieldFamily family() const = 0;
  virtual int dimension() const = 0;
  virtual Vec value(double t, const Vec& x) const = 0;
  // Jacobian in x where the field is smooth; nullopt elsewhere.
  virtual std::optional<Mat> jacobian(double t, const Vec& x) const = 0;
  virtual double lip(double t) const = 0;
  // sup over the given box of |b_t|.
  virtual double sup_on(double t, const Box& box) const = 0;

  // Times where the profiles blow up (a Lebesgue-null set).
  virtual std::vector<double> singular_times() const { return {}; }
  // Times where b jumps in t; integration restarts there.
  virtual std::vector<double> breakpoints() const { return {}; }

  // (A, c) with b_t(y) = A y + c for all |y - x| < r, when known.
  virtual std::optional<std::pair<Mat, Vec>> affine_near(double, const Vec&, double) const { return std::nullopt; }

  // integral_a^b Lip(b_r) dr and integral_a^b sup_box |b_r| dr; the defaults
  // use adaptive quadrature, analytic families override with closed forms.
  virtual double lip_integral(double a, double b) const;
  virtual double sup_integral_on(double a, double b, const Box& box) const;
  double sup_integral(double a, double b) const { return sup_integral_on(a, b, box_); }

  // b does not depend on t.
  virtual bool autonomous() const { return false; }

  const Box& box() const { return box_; }
  double sup(double t) const { return sup_on(t, box_); }

  // Pointwise smooth view of b_t (for Lie derivatives of forms).
  SmoothVectorField at_time(double t) const;

protected:
  explicit VectorField(Box box) : box_(std::move(box)) {}
  Box box_;
};

using FieldPtr = std::shared_ptr<const VectorField>;

FieldPtr make_zero_field(Box box);
FieldPtr make_constant_field(Vec c, Box box);
// b(t, x) = a(t) (A x + c)
FieldPtr make_affine_field(FieldFamily family, Mat a, Vec c, TimeProfile profile, Box box);
inline FieldPtr make_linear_field(Mat a, TimeProfile profile, Box box) {
  const Vec c = Vec::Zero(a.rows());
  return make_affine_field(FieldFamily::Linear, std::move(a), c, profile, std::move(box));
}
// b(x, y) = (y, 0) for y >= 0 and 0 otherwise.
FieldPtr make_shear_field(Box box);
// b(t, x) = A_i x + c_i on the i-th cell of a time partition of [0, 1].
FieldPtr make_gridded_field(std::vector<double> breakpoints, std::vector<Mat> matrices, std::vector<Vec> offsets,
                            Box box);

struct MollifyOptions {
  int nodes = 16; // Gauss-Legendre nodes per axis
};

// b^eps = b * (phi^eps psi^eps), b extended by zero outside t in [0, 1].
FieldPtr mollify(const FieldPtr& field, double eps, MollifyOptions options = {});

// Verifies integral_0^1 (sup + Lip) dt < inf by adaptive quadrature and
// returns it; throws "field not in class (L)" otherwise.
double check_class_L(const VectorField& field);

struct SpaceTimePoint {
  double t = 0.0;
  Vec x;
};

inline double time_projection(const SpaceTimePoint& p) { return p.t; }
inline const Vec& space_projection(const SpaceTimePoint& p) { return p.x; }
inline SpaceTimePoint immersion(double t, const Vec& x) { return {t, x}; }
Vec to_vector(const SpaceTimePoint& p);

struct DirectionalDerivative {
  Vec value;
  double error_estimate = 0.0;
  bool converged = true;
};

struct InverseQuotientStudy {
  std::vector<double> steps;
  std::vector<Vec> quotients; // space-time vectors
  std::vector<double> errors; // |q(h) - (1, 0)|
  Vec limit;                  // Richardson extrapolation of the two finest
  double observed_order = 0.0;
  bool at_noise_floor = false; // every error below the floor
  bool converged = true;
};

// Flow map Phi_t^s of a field in class (L). Time steps are equidistributed in
// the budget Lambda(t) = integral_0^t (1 + sup + Lip), integrated with 3-stage
// Gauss-Legendre collocation in the budget variable.
class FlowMap {
public:
  FlowMap(FieldPtr field, double tolerance = 1e-8);

  const VectorField& field() const { return *field_; }
  const FieldPtr& field_ptr() const { return field_; }
  double tolerance() const { return tolerance_; }

  double budget(double t) const;
  double budget_rate(double t) const; // 1 + sup + Lip
  double time_at_budget(double s) const;
  double budget_step() const { return step_; }
  void set_budget_step(double step);

  Vec flow(double s, double t, const Vec& x) const;
  Vec flow_inverse(double t, const Vec& y) const { return flow(t, 0.0, y); }
  SpaceTimePoint psi(double t, const Vec& x) const { return {t, flow(0.0, t, x)}; }
  SpaceTimePoint psi_inverse(double s, const Vec& y) const { return {s, flow_inverse(s, y)}; }

  // Central differences with Richardson extrapolation over h in {1e-3, 5e-4, 2.5e-4}.
  DirectionalDerivative flow_directional_derivative(double s, double t, const Vec& x, const Vec& v) const;

  // (1, b_t(Phi_t^0(x))).
  Vec dpsi_time_direction(double t, const Vec& x) const;
  // [Psi(t + h, x) - Psi(t, x)] / h.
  Vec psi_time_quotient(double t, const Vec& x, double h) const;
  // Difference quotients of Psi^{-1} along (1, b_t(Phi_t^0(x))) at Psi(t, x).
  InverseQuotientStudy dpsi_inverse_flow_direction(double t, const Vec& x,
                                                   std::vector<double> steps = {1e-2, 5e-3, 2.5e-3, 1.25e-3}) const;

  // exp(int_s^t1 Lip) |x - y| + int_t1^t2 sup
  double gronwall_bound(double s, double t1, double t2, const Vec& x, const Vec& y) const;

  // Integral-equation residual |Phi_t^s(x) - x - int_s^t b_r(Phi_r^s(x)) dr|.
  double integral_residual(double s, double t, const Vec& x, int panels = 16) const;

private:
  void integrate_piece(double a, double b, Vec& x) const;

  FieldPtr field_;
  double tolerance_;
  double step_;
  std::vector<double> breaks_;
  std::vector<double> table_t_;
  std::vector<double> table_budget_;
};

// n sample times avoiding the field's singular set and breakpoints.
std::vector<double> lebesgue_time_sampler(const VectorField& field, int n);

} // namespace gte
