#include "gte/flows.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "quadrature.hpp"

namespace gte {
namespace {

constexpr int kBudgetTable = 256;

// 3-stage Gauss-Legendre collocation tableau.
struct Collocation {
  double c[3];
  double a[3][3];
  double b[3];
};

const Collocation& gauss3() {
  static const Collocation g = [] {
    const double r = std::sqrt(15.0);
    Collocation t{};
    t.c[0] = 0.5 - r / 10.0;
    t.c[1] = 0.5;
    t.c[2] = 0.5 + r / 10.0;
    t.a[0][0] = 5.0 / 36.0;
    t.a[0][1] = 2.0 / 9.0 - r / 15.0;
    t.a[0][2] = 5.0 / 36.0 - r / 30.0;
    t.a[1][0] = 5.0 / 36.0 + r / 24.0;
    t.a[1][1] = 2.0 / 9.0;
    t.a[1][2] = 5.0 / 36.0 - r / 24.0;
    t.a[2][0] = 5.0 / 36.0 + r / 30.0;
    t.a[2][1] = 2.0 / 9.0 + r / 15.0;
    t.a[2][2] = 5.0 / 36.0;
    t.b[0] = 5.0 / 18.0;
    t.b[1] = 4.0 / 9.0;
    t.b[2] = 5.0 / 18.0;
    return t;
  }();
  return g;
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error("flow time outside [0,1]");
}

} // namespace

Vec to_vector(const SpaceTimePoint& p) {
  Vec v(p.x.size() + 1);
  v[0] = p.t;
  v.tail(p.x.size()) = p.x;
  return v;
}

FlowMap::FlowMap(FieldPtr field, double tolerance) : field_(std::move(field)), tolerance_(tolerance) {
  if (!field_) throw Error("flow map needs a field");
  if (!(tolerance > 0.0)) throw Error("integrator tolerance must be positive");
  check_class_L(*field_);
  step_ = std::min(0.25, 0.5 * std::pow(tolerance_, 1.0 / 6.0));
  breaks_ = field_->breakpoints();
  std::vector<double> ts;
  ts.reserve(kBudgetTable + 1 + breaks_.size());
  for (int j = 0; j <= kBudgetTable; ++j) ts.push_back(static_cast<double>(j) / kBudgetTable);
  for (double b : breaks_) ts.push_back(b);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  table_t_ = ts;
  table_budget_.assign(ts.size(), 0.0);
  for (std::size_t j = 1; j < ts.size(); ++j) {
    const double a = ts[j - 1], b = ts[j];
    table_budget_[j] = table_budget_[j - 1] + (b - a) + field_->sup_integral(a, b) + field_->lip_integral(a, b);
  }
  if (!std::isfinite(table_budget_.back())) throw Error("field not in class (L)");
}

void FlowMap::set_budget_step(double step) {
  if (!(step > 0.0)) throw Error("budget step must be positive");
  step_ = step;
}

double FlowMap::budget(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  const auto it = std::upper_bound(table_t_.begin(), table_t_.end(), t);
  const std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - table_t_.begin()) - 1));
  const double a = table_t_[j];
  if (t == a) return table_budget_[j];
  return table_budget_[j] + (t - a) + field_->sup_integral(a, t) + field_->lip_integral(a, t);
}

double FlowMap::budget_rate(double t) const { return 1.0 + field_->sup(t) + field_->lip(t); }

double FlowMap::time_at_budget(double s) const {
  const double total = table_budget_.back();
  if (s <= 0.0) return 0.0;
  if (s >= total) return 1.0;
  const auto it = std::upper_bound(table_budget_.begin(), table_budget_.end(), s);
  const std::size_t j = static_cast<std::size_t>((it - table_budget_.begin()) - 1);
  double lo = table_t_[j], hi = table_t_[j + 1];
  double t = lo + (s - table_budget_[j]) / (table_budget_[j + 1] - table_budget_[j]) * (hi - lo);
  const double tiny = 4e-16 * std::max(1.0, total);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = budget(t) - s;
    if (std::abs(f) <= tiny) break;
    if (f > 0.0) hi = t;
    else lo = t;
    double next = t - f / budget_rate(t);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == t) break;
    t = next;
  }
  return t;
}

void FlowMap::integrate_piece(double a, double b, Vec& x) const {
  const Collocation& g = gauss3();
  const double sa = budget(a);
  const double sb = budget(b);
  const double length = sb - sa;
  if (length == 0.0) return;
  const auto n = static_cast<long>(std::max(1.0, std::ceil(std::abs(length) / step_ - 1e-9)));
  const double h = length / static_cast<double>(n);
  const int d = static_cast<int>(x.size());
  Vec k[3], y(d);
  double ts[3], rates[3];
  for (long step = 0; step < n; ++step) {
    const double s0 = sa + static_cast<double>(step) * h;
    for (int i = 0; i < 3; ++i) {
      ts[i] = time_at_budget(s0 + g.c[i] * h);
      rates[i] = budget_rate(ts[i]);
      k[i] = field_->value(ts[i], x) / rates[i];
    }
    for (int iter = 0; iter < 100; ++iter) {
      double change = 0.0, scale = 0.0;
      Vec next[3];
      for (int i = 0; i < 3; ++i) {
        y = x + h * (g.a[i][0] * k[0] + g.a[i][1] * k[1] + g.a[i][2] * k[2]);
        next[i] = field_->value(ts[i], y) / rates[i];
      }
      for (int i = 0; i < 3; ++i) {
        change = std::max(change, (next[i] - k[i]).lpNorm<Eigen::Infinity>());
        scale = std::max(scale, next[i].lpNorm<Eigen::Infinity>());
        k[i] = std::move(next[i]);
      }
      if (change <= 1e-15 * (1.0 + scale)) break;
    }
    x += h * (g.b[0] * k[0] + g.b[1] * k[1] + g.b[2] * k[2]);
  }
}

Vec FlowMap::flow(double s, double t, const Vec& x) const {
  check_time(s);
  check_time(t);
  if (x.size() != field_->dimension()) throw Error("flow start point has wrong dimension");
  Vec y = x;
  if (s == t) return y;
  std::vector<double> cuts{s};
  for (double c : breaks_)
    if (c > std::min(s, t) && c < std::max(s, t)) cuts.push_back(c);
  if (s < t) std::sort(cuts.begin(), cuts.end());
  else std::sort(cuts.begin(), cuts.end(), std::greater<>());
  cuts.push_back(t);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) integrate_piece(cuts[i], cuts[i + 1], y);
  return y;
}

DirectionalDerivative FlowMap::flow_directional_derivative(double s, double t, const Vec& x, const Vec& v) const {
  const double hs[3] = {1e-3, 5e-4, 2.5e-4};
  Vec dq[3];
  for (int i = 0; i < 3; ++i) dq[i] = (flow(s, t, x + hs[i] * v) - flow(s, t, x - hs[i] * v)) / (2.0 * hs[i]);
  const Vec r1 = (4.0 * dq[1] - dq[0]) / 3.0;
  const Vec r2 = (4.0 * dq[2] - dq[1]) / 3.0;
  DirectionalDerivative out;
  out.value = (16.0 * r2 - r1) / 15.0;
  out.error_estimate = (out.value - r2).norm();
  const double d01 = (dq[0] - dq[1]).norm();
  const double d12 = (dq[1] - dq[2]).norm();
  const double noise = std::max(1e-10, 10.0 * tolerance_ / hs[2]) * (1.0 + dq[2].norm());
  if (d12 > noise) {
    const double ratio = d01 / d12;
    out.converged = ratio > 2.0 && ratio < 20.0;
  }
  return out;
}

Vec FlowMap::dpsi_time_direction(double t, const Vec& x) const {
  SpaceTimePoint p{t, field_->value(t, flow(0.0, t, x))};
  p.t = 1.0;
  return to_vector(p);
}

Vec FlowMap::psi_time_quotient(double t, const Vec& x, double h) const {
  return (to_vector(psi(t + h, x)) - to_vector(psi(t, x))) / h;
}

InverseQuotientStudy FlowMap::dpsi_inverse_flow_direction(double t, const Vec& x, std::vector<double> steps) const {
  check_time(t);
  const int d = field_->dimension();
  InverseQuotientStudy out;
  const Vec y = flow(0.0, t, x);
  const Vec w = field_->value(t, y);
  Vec target = Vec::Zero(d + 1);
  target[0] = 1.0;
  std::vector<double> lx, ly;
  out.at_noise_floor = true;
  for (double h : steps) {
    if (t + h > 1.0) h = -h;
    h = (t + h) - t; // representable step, so the time component is exact
    const SpaceTimePoint back = psi_inverse(t + h, y + h * w);
    Vec q(d + 1);
    q[0] = (back.t - t) / h;
    q.tail(d) = (back.x - x) / h;
    const double err = (q - target).norm();
    out.steps.push_back(std::abs(h));
    out.quotients.push_back(q);
    out.errors.push_back(err);
    const double floor = 10.0 * tolerance_ / std::abs(h);
    if (err > floor) {
      out.at_noise_floor = false;
      lx.push_back(std::log(std::abs(h)));
      ly.push_back(std::log(err));
    }
  }
  const std::size_t n = out.quotients.size();
  out.limit = n >= 2 ? Vec(2.0 * out.quotients[n - 1] - out.quotients[n - 2]) : out.quotients.back();
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    out.observed_order = sxx > 0.0 ? sxy / sxx : 0.0;
  } else {
    out.observed_order = std::numeric_limits<double>::infinity();
  }
  out.converged = out.at_noise_floor || lx.size() < 2 || out.observed_order >= 0.5;
  return out;
}

double FlowMap::gronwall_bound(double s, double t1, double t2, const Vec& x, const Vec& y) const {
  const double lip = std::abs(field_->lip_integral(std::min(s, t1), std::max(s, t1)));
  const double drift = t2 > t1 ? field_->sup_integral(t1, t2) : 0.0;
  return std::exp(lip) * (x - y).norm() + drift;
}

double FlowMap::integral_residual(double s, double t, const Vec& x, int panels) const {
  check_time(s);
  check_time(t);
  if (s == t) return 0.0;
  const auto& rule = detail::gauss_rule(20);
  std::vector<double> cuts{s};
  for (double c : breaks_)
    if (c > std::min(s, t) && c < std::max(s, t)) cuts.push_back(c);
  if (s < t) std::sort(cuts.begin(), cuts.end());
  else std::sort(cuts.begin(), cuts.end(), std::greater<>());
  cuts.push_back(t);
  // Integrate b_r(Phi_r^s(x)) dr in the budget variable, marching along the trajectory.
  Vec integral = Vec::Zero(x.size());
  Vec pos = x;
  double r_prev = s;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double ca = budget(cuts[c]), cb = budget(cuts[c + 1]);
    const double width = (cb - ca) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = ca + p * width;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double sigma = lo + 0.5 * width * (rule.nodes[q] + 1.0);
        const double r = time_at_budget(sigma);
        pos = flow(r_prev, r, pos);
        r_prev = r;
        integral += (0.5 * width * rule.weights[q] / budget_rate(r)) * field_->value(r, pos);
      }
    }
  }
  const Vec end = flow(s, t, x);
  return (end - x - integral).norm();
}

std::vector<double> lebesgue_time_sampler(const VectorField& field, int n) {
  std::vector<double> out;
  if (n <= 0) return out;
  const auto singular = field.singular_times();
  const auto breaks = field.breakpoints();
  double lo = 0.0, hi = 1.0;
  const double delta = 1e-3;
  for (double s : singular) {
    if (s <= 0.0) lo = delta;
    if (s >= 1.0) hi = 1.0 - delta;
  }
  if (!breaks.empty() && static_cast<std::size_t>(n) == breaks.size() + 1) {
    double prev = 0.0;
    for (double b : breaks) {
      out.push_back(0.5 * (prev + b));
      prev = b;
    }
    out.push_back(0.5 * (prev + 1.0));
    return out;
  }
  const double width = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    double t = lo + (i + 0.5) * width;
    for (double b : breaks)
      if (std::abs(t - b) < 1e-12) t += 0.25 * width;
    for (double s : singular)
      if (std::abs(t - s) < 1e-12) t += 0.25 * width;
    out.push_back(t);
  }
  return out;
}

} // namespace gte
