#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/SVD>

#include "gte/flows.hpp"
#include "quadrature.hpp"

namespace gte {

bool Box::contains(const Vec& x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

Box Box::inflated(double margin) const {
  Box b = *this;
  b.lower.array() -= margin;
  b.upper.array() += margin;
  return b;
}

std::vector<Vec> Box::corners() const {
  const int d = dimension();
  std::vector<Vec> out;
  for (unsigned m = 0; m < (1u << d); ++m) {
    Vec c(d);
    for (int i = 0; i < d; ++i) c[i] = (m >> i) & 1u ? upper[i] : lower[i];
    out.push_back(std::move(c));
  }
  return out;
}

const char* family_name(FieldFamily f) {
  switch (f) {
  case FieldFamily::Zero: return "zero";
  case FieldFamily::Constant: return "constant";
  case FieldFamily::Linear: return "linear";
  case FieldFamily::TimeModulated: return "time_modulated";
  case FieldFamily::Shear: return "shear";
  case FieldFamily::Mollified: return "mollified";
  case FieldFamily::Gridded: return "gridded";
  }
  return "?";
}

const char* profile_name(TimeProfile p) {
  switch (p) {
  case TimeProfile::One: return "one";
  case TimeProfile::Sine: return "sine";
  case TimeProfile::InvSqrt: return "inv_sqrt";
  case TimeProfile::InvLinear: return "inv_linear";
  }
  return "?";
}

double profile_value(TimeProfile p, double t) {
  switch (p) {
  case TimeProfile::One: return 1.0;
  case TimeProfile::Sine: return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t);
  case TimeProfile::InvSqrt: return t > 0.0 ? 0.5 / std::sqrt(t) : std::numeric_limits<double>::infinity();
  case TimeProfile::InvLinear: return t > 0.0 ? 1.0 / t : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double profile_integral(TimeProfile p, double a, double b) {
  switch (p) {
  case TimeProfile::One: return b - a;
  case TimeProfile::Sine:
    return (b - a) + 0.25 * (std::cos(2.0 * std::numbers::pi * a) - std::cos(2.0 * std::numbers::pi * b)) / std::numbers::pi;
  case TimeProfile::InvSqrt: return std::sqrt(std::max(b, 0.0)) - std::sqrt(std::max(a, 0.0));
  case TimeProfile::InvLinear:
    if (a <= 0.0) return std::numeric_limits<double>::infinity();
    return std::log(b / a);
  }
  return 0.0;
}

namespace {

std::vector<double> cell_edges(const VectorField& f, double a, double b) {
  std::vector<double> edges{a};
  for (double t : f.breakpoints())
    if (t > a && t < b) edges.push_back(t);
  edges.push_back(b);
  return edges;
}

bool touches_singular(const VectorField& f, double a, double b) {
  for (double s : f.singular_times())
    if (s >= a && s <= b) return true;
  return false;
}

double integrate_profile(const VectorField& f, double a, double b, const std::function<double(double)>& g) {
  if (a == b) return 0.0;
  if (a > b) return -integrate_profile(f, b, a, g);
  const auto edges = cell_edges(f, a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    sum += detail::integrate(g, edges[i], edges[i + 1], touches_singular(f, edges[i], edges[i + 1])).value;
  return sum;
}

double operator_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double max_over_corners(const Box& box, const Mat& a, const Vec& c) {
  double m = 0.0;
  for (const Vec& v : box.corners()) m = std::max(m, (a * v + c).norm());
  return m;
}

void check_box(const Box& box, int d) {
  if (box.lower.size() != d || box.upper.size() != d) throw Error("bounding box dimension mismatch");
  for (int i = 0; i < d; ++i)
    if (!(box.lower[i] <= box.upper[i])) throw Error("bounding box lower bound exceeds upper bound");
}

class AffineField final : public VectorField {
public:
  AffineField(FieldFamily family, Mat a, Vec c, TimeProfile profile, Box box)
      : VectorField(std::move(box)), family_(family), a_(std::move(a)), c_(std::move(c)), profile_(profile) {
    const int d = static_cast<int>(a_.rows());
    if (d < 1 || d > kMaxDimension || a_.cols() != d || c_.size() != d) throw Error("affine field shape mismatch");
    check_box(box_, d);
    lip_ = operator_norm(a_);
    sup_box_ = max_over_corners(box_, a_, c_);
  }

  FieldFamily family() const override { return family_; }
  int dimension() const override { return static_cast<int>(a_.rows()); }
  Vec value(double t, const Vec& x) const override { return profile_value(profile_, t) * (a_ * x + c_); }
  std::optional<Mat> jacobian(double t, const Vec&) const override { return profile_value(profile_, t) * a_; }
  double lip(double t) const override { return lip_ == 0.0 ? 0.0 : profile_value(profile_, t) * lip_; }
  double sup_on(double t, const Box& box) const override {
    const double s = max_over_corners(box, a_, c_);
    return s == 0.0 ? 0.0 : profile_value(profile_, t) * s;
  }
  std::vector<double> singular_times() const override {
    if (profile_ == TimeProfile::InvSqrt || profile_ == TimeProfile::InvLinear) return {0.0};
    return {};
  }
  double lip_integral(double a, double b) const override {
    return lip_ == 0.0 ? 0.0 : lip_ * profile_integral(profile_, a, b);
  }
  double sup_integral_on(double a, double b, const Box& box) const override {
    const double s = &box == &box_ ? sup_box_ : max_over_corners(box, a_, c_);
    return s == 0.0 ? 0.0 : s * profile_integral(profile_, a, b);
  }
  bool autonomous() const override { return profile_ == TimeProfile::One; }
  std::optional<std::pair<Mat, Vec>> affine_near(double t, const Vec&, double) const override {
    const double s = profile_value(profile_, t);
    return std::make_pair(Mat(s * a_), Vec(s * c_));
  }

private:
  FieldFamily family_;
  Mat a_;
  Vec c_;
  TimeProfile profile_;
  double lip_ = 0.0;
  double sup_box_ = 0.0;
};

class ShearField final : public VectorField {
public:
  explicit ShearField(Box box) : VectorField(std::move(box)) { check_box(box_, 2); }

  FieldFamily family() const override { return FieldFamily::Shear; }
  int dimension() const override { return 2; }
  Vec value(double, const Vec& x) const override {
    Vec out = Vec::Zero(2);
    if (x[1] >= 0.0) out[0] = x[1];
    return out;
  }
  std::optional<Mat> jacobian(double, const Vec& x) const override {
    if (x[1] == 0.0) return std::nullopt;
    Mat j = Mat::Zero(2, 2);
    if (x[1] > 0.0) j(0, 1) = 1.0;
    return j;
  }
  double lip(double) const override { return 1.0; }
  double sup_on(double, const Box& box) const override { return std::max(0.0, box.upper[1]); }
  double lip_integral(double a, double b) const override { return b - a; }
  double sup_integral_on(double a, double b, const Box& box) const override { return (b - a) * sup_on(0.0, box); }
  bool autonomous() const override { return true; }
  std::optional<std::pair<Mat, Vec>> affine_near(double, const Vec& x, double r) const override {
    Mat a = Mat::Zero(2, 2);
    if (x[1] >= r) a(0, 1) = 1.0;
    else if (x[1] > -r) return std::nullopt;
    return std::make_pair(a, Vec(Vec::Zero(2)));
  }
};

class GriddedField final : public VectorField {
public:
  GriddedField(std::vector<double> edges, std::vector<Mat> a, std::vector<Vec> c, Box box)
      : VectorField(std::move(box)), edges_(std::move(edges)), a_(std::move(a)), c_(std::move(c)) {
    if (a_.empty() || edges_.size() != a_.size() + 1 || c_.size() != a_.size())
      throw Error("gridded field needs one matrix and offset per time cell");
    if (edges_.front() != 0.0 || edges_.back() != 1.0) throw Error("gridded field partition must span [0,1]");
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i)
      if (!(edges_[i] < edges_[i + 1])) throw Error("gridded field partition must be increasing");
    const int d = static_cast<int>(a_[0].rows());
    if (d < 1 || d > kMaxDimension) throw Error("gridded field dimension out of range");
    check_box(box_, d);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (a_[i].rows() != d || a_[i].cols() != d || c_[i].size() != d) throw Error("gridded field shape mismatch");
      lips_.push_back(operator_norm(a_[i]));
      sups_.push_back(max_over_corners(box_, a_[i], c_[i]));
    }
  }

  FieldFamily family() const override { return FieldFamily::Gridded; }
  int dimension() const override { return static_cast<int>(a_[0].rows()); }
  Vec value(double t, const Vec& x) const override {
    const std::size_t i = cell(t);
    return a_[i] * x + c_[i];
  }
  std::optional<Mat> jacobian(double t, const Vec&) const override { return a_[cell(t)]; }
  double lip(double t) const override { return lips_[cell(t)]; }
  double sup_on(double t, const Box& box) const override {
    const std::size_t i = cell(t);
    return max_over_corners(box, a_[i], c_[i]);
  }
  std::vector<double> breakpoints() const override { return {edges_.begin() + 1, edges_.end() - 1}; }
  double lip_integral(double a, double b) const override { return piecewise(a, b, lips_); }
  double sup_integral_on(double a, double b, const Box& box) const override {
    if (&box == &box_) return piecewise(a, b, sups_);
    std::vector<double> rate;
    for (std::size_t i = 0; i < a_.size(); ++i) rate.push_back(max_over_corners(box, a_[i], c_[i]));
    return piecewise(a, b, rate);
  }
  std::optional<std::pair<Mat, Vec>> affine_near(double t, const Vec&, double) const override {
    const std::size_t i = cell(t);
    return std::make_pair(a_[i], c_[i]);
  }

private:
  std::size_t cell(double t) const {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
    const std::ptrdiff_t i = (it - edges_.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(a_.size()) - 1));
  }
  double piecewise(double a, double b, const std::vector<double>& rate) const {
    if (a > b) return -piecewise(b, a, rate);
    double sum = 0.0;
    for (std::size_t i = 0; i < rate.size(); ++i) {
      const double lo = std::max(a, edges_[i]);
      const double hi = std::min(b, edges_[i + 1]);
      if (hi > lo) sum += (hi - lo) * rate[i];
    }
    return sum;
  }

  std::vector<double> edges_;
  std::vector<Mat> a_;
  std::vector<Vec> c_;
  std::vector<double> lips_;
  std::vector<double> sups_;
};

class MollifiedField final : public VectorField {
public:
  MollifiedField(FieldPtr base, double eps, int nodes)
      : VectorField(base->box()), base_(std::move(base)), eps_(eps) {
    const auto& rule = detail::gauss_rule(nodes);
    const int d = base_->dimension();
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double xi = rule.nodes[i];
      const double w = rule.weights[i] * bump_profile(xi * xi);
      if (w == 0.0) continue;
      tau_.push_back(eps * xi);
      wt_.push_back(w);
      total += w;
    }
    for (double& w : wt_) w /= total;

    const std::size_t m = rule.nodes.size();
    std::vector<std::size_t> idx(d, 0);
    total = 0.0;
    for (;;) {
      double s = 0.0;
      double w = 1.0;
      Vec z(d);
      for (int j = 0; j < d; ++j) {
        z[j] = rule.nodes[idx[j]];
        s += z[j] * z[j];
        w *= rule.weights[idx[j]];
      }
      w *= bump_profile(s);
      if (w > 0.0) {
        z_.push_back(eps * z);
        wz_.push_back(w);
        total += w;
      }
      int j = 0;
      while (j < d && ++idx[j] == m) idx[j++] = 0;
      if (j == d) break;
    }
    for (double& w : wz_) w /= total;
  }

  FieldFamily family() const override { return FieldFamily::Mollified; }
  int dimension() const override { return base_->dimension(); }

  Vec value(double t, const Vec& x) const override {
    Vec out = Vec::Zero(x.size());
    std::optional<Vec> spatial;
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double r = t - tau_[i];
      if (r <= 0.0 || r >= 1.0) continue;
      if (auto aff = base_->affine_near(r, x, eps_)) {
        out += wt_[i] * (aff->first * x + aff->second);
        continue;
      }
      if (base_->autonomous()) {
        // The spatial average is the same for every time node.
        if (!spatial) {
          spatial = Vec::Zero(x.size());
          for (std::size_t k = 0; k < z_.size(); ++k) *spatial += wz_[k] * base_->value(r, x - z_[k]);
        }
        out += wt_[i] * *spatial;
        continue;
      }
      for (std::size_t k = 0; k < z_.size(); ++k) out += (wt_[i] * wz_[k]) * base_->value(r, x - z_[k]);
    }
    return out;
  }

  std::optional<Mat> jacobian(double t, const Vec& x) const override {
    const int d = dimension();
    Mat out = Mat::Zero(d, d);
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double r = t - tau_[i];
      if (r <= 0.0 || r >= 1.0) continue;
      if (auto aff = base_->affine_near(r, x, eps_)) {
        out += wt_[i] * aff->first;
        continue;
      }
      for (std::size_t k = 0; k < z_.size(); ++k) {
        auto j = base_->jacobian(r, x - z_[k]);
        if (!j) return std::nullopt;
        out += (wt_[i] * wz_[k]) * *j;
      }
    }
    return out;
  }

  double lip(double t) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double r = t - tau_[i];
      if (r > 0.0 && r < 1.0) s += wt_[i] * base_->lip(r);
    }
    return s;
  }

  double sup_on(double t, const Box& box) const override {
    const Box wide = box.inflated(eps_);
    double s = 0.0;
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double r = t - tau_[i];
      if (r > 0.0 && r < 1.0) s += wt_[i] * base_->sup_on(r, wide);
    }
    return s;
  }

  double lip_integral(double a, double b) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double lo = std::clamp(a - tau_[i], 0.0, 1.0), hi = std::clamp(b - tau_[i], 0.0, 1.0);
      if (lo != hi) s += wt_[i] * base_->lip_integral(lo, hi);
    }
    return s;
  }

  double sup_integral_on(double a, double b, const Box& box) const override {
    const Box wide = box.inflated(eps_);
    double s = 0.0;
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double lo = std::clamp(a - tau_[i], 0.0, 1.0), hi = std::clamp(b - tau_[i], 0.0, 1.0);
      if (lo != hi) s += wt_[i] * base_->sup_integral_on(lo, hi, wide);
    }
    return s;
  }

  // b^eps is non-smooth in t where a node of the time rule crosses a
  // breakpoint, a singular time, or an end of [0, 1] of the base field.
  std::vector<double> breakpoints() const override { return shifted(base_->breakpoints(), true); }
  std::vector<double> singular_times() const override { return shifted(base_->singular_times(), false); }

  std::optional<std::pair<Mat, Vec>> affine_near(double t, const Vec& x, double radius) const override {
    const int d = dimension();
    Mat a = Mat::Zero(d, d);
    Vec c = Vec::Zero(d);
    for (std::size_t i = 0; i < tau_.size(); ++i) {
      const double r = t - tau_[i];
      if (r <= 0.0 || r >= 1.0) continue;
      auto aff = base_->affine_near(r, x, radius + eps_);
      if (!aff) return std::nullopt;
      a += wt_[i] * aff->first;
      c += wt_[i] * aff->second;
    }
    return std::make_pair(a, c);
  }

private:
  std::vector<double> shifted(const std::vector<double>& times, bool with_ends) const {
    std::vector<double> src = times;
    if (with_ends) {
      src.push_back(0.0);
      src.push_back(1.0);
    }
    std::vector<double> out;
    for (double s : src)
      for (double tau : tau_) {
        const double t = s + tau;
        if (t > 0.0 && t < 1.0) out.push_back(t);
      }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  FieldPtr base_;
  double eps_;
  std::vector<double> tau_, wt_;
  std::vector<Vec> z_;
  std::vector<double> wz_;
};

} // namespace

double VectorField::lip_integral(double a, double b) const {
  return integrate_profile(*this, a, b, [this](double t) { return lip(t); });
}

double VectorField::sup_integral_on(double a, double b, const Box& box) const {
  return integrate_profile(*this, a, b, [this, &box](double t) { return sup_on(t, box); });
}

SmoothVectorField VectorField::at_time(double t) const {
  SmoothVectorField f;
  f.value = [this, t](const Vec& x) { return value(t, x); };
  f.jacobian = [this, t](const Vec& x) {
    auto j = jacobian(t, x);
    if (!j) throw Error("field Jacobian undefined at this point");
    return *j;
  };
  return f;
}

FieldPtr make_zero_field(Box box) {
  const int d = box.dimension();
  return std::make_shared<AffineField>(FieldFamily::Zero, Mat::Zero(d, d), Vec::Zero(d), TimeProfile::One,
                                       std::move(box));
}

FieldPtr make_constant_field(Vec c, Box box) {
  const int d = static_cast<int>(c.size());
  return std::make_shared<AffineField>(FieldFamily::Constant, Mat::Zero(d, d), std::move(c), TimeProfile::One,
                                       std::move(box));
}

FieldPtr make_affine_field(FieldFamily family, Mat a, Vec c, TimeProfile profile, Box box) {
  if (family != FieldFamily::Linear && family != FieldFamily::TimeModulated && family != FieldFamily::Zero &&
      family != FieldFamily::Constant)
    throw Error(std::string("family '") + family_name(family) + "' is not affine");
  return std::make_shared<AffineField>(family, std::move(a), std::move(c), profile, std::move(box));
}

FieldPtr make_shear_field(Box box) { return std::make_shared<ShearField>(std::move(box)); }

FieldPtr make_gridded_field(std::vector<double> breakpoints, std::vector<Mat> matrices, std::vector<Vec> offsets,
                            Box box) {
  return std::make_shared<GriddedField>(std::move(breakpoints), std::move(matrices), std::move(offsets),
                                        std::move(box));
}

FieldPtr mollify(const FieldPtr& field, double eps, MollifyOptions options) {
  if (!field) throw Error("mollify needs a field");
  if (!(eps > 0.0)) throw Error("mollification radius must be positive");
  return std::make_shared<MollifiedField>(field, eps, options.nodes);
}

double check_class_L(const VectorField& field) {
  const auto edges = cell_edges(field, 0.0, 1.0);
  const auto rate = [&field](double t) { return field.sup(t) + field.lip(t); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    detail::QuadratureResult r;
    try {
      r = detail::integrate(rate, edges[i], edges[i + 1], touches_singular(field, edges[i], edges[i + 1]));
    } catch (const std::exception&) {
      throw Error("field not in class (L)");
    }
    if (!std::isfinite(r.value) || !std::isfinite(r.error) || r.error > 1e-6 * (1.0 + std::abs(r.value)))
      throw Error("field not in class (L)");
    total += r.value;
  }
  return total;
}

} // namespace gte
