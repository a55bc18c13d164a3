#include "gte/exterior.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

namespace gte {
namespace {

struct BasisTables {
  // masks[n][k] in lexicographic order of the sorted index tuple.
  std::array<std::array<std::vector<IndexMask>, kMaxDimension + 1>, kMaxDimension + 1> masks;
  // position[n][mask] within masks[n][popcount(mask)].
  std::array<std::vector<std::uint16_t>, kMaxDimension + 1> position;

  BasisTables() {
    for (int n = 0; n <= kMaxDimension; ++n) {
      position[n].assign(std::size_t{1} << n, 0);
      for (int k = 0; k <= n; ++k) {
        // Enumerate combinations lexicographically.
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        while (true) {
          IndexMask m = 0;
          for (int i : idx) m |= static_cast<IndexMask>(1u << i);
          position[n][m] = static_cast<std::uint16_t>(masks[n][k].size());
          masks[n][k].push_back(m);
          int i = k - 1;
          while (i >= 0 && idx[i] == n - k + i) --i;
          if (i < 0) break;
          ++idx[i];
          for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
      }
    }
  }
};

const BasisTables& tables() {
  static const BasisTables t;
  return t;
}

void check_dimension(int n) {
  if (n < 0 || n > kMaxDimension)
    throw Error("exterior algebra dimension " + std::to_string(n) + " outside [0, " +
                std::to_string(kMaxDimension) + "]");
}

// Sign of moving the sorted set b past the sorted set a: (-1)^#{(i,j): i in a, j in b, i > j}.
double merge_sign(IndexMask a, IndexMask b) {
  int inversions = 0;
  for (IndexMask rest = b; rest != 0; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    inversions += std::popcount(static_cast<unsigned>(a >> (j + 1)));
  }
  return (inversions & 1) ? -1.0 : 1.0;
}

// Sorts a 1-based index tuple; returns 0 on repetition, otherwise the permutation sign.
double canonicalize(std::span<const int> indices, int n, IndexMask& mask) {
  std::vector<int> v(indices.begin(), indices.end());
  for (int i : v)
    if (i < 1 || i > n) throw Error("basis index " + std::to_string(i) + " outside 1.." + std::to_string(n));
  double sign = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j + 1 < v.size() - i; ++j)
      if (v[j] > v[j + 1]) {
        std::swap(v[j], v[j + 1]);
        sign = -sign;
      }
  mask = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i] == v[i - 1]) return 0.0;
    mask |= static_cast<IndexMask>(1u << (v[i] - 1));
  }
  return sign;
}

template <class T>
T wedge_impl(const T& a, const T& b, bool& overflow) {
  if (a.dimension() != b.dimension()) throw Error("wedge: dimension mismatch");
  const int n = a.dimension();
  const int k = a.grade() + b.grade();
  if (k > n) {
    overflow = true;
    return T(n, n);
  }
  T out(n, k);
  const auto ma = basis_masks(n, a.grade());
  const auto mb = basis_masks(n, b.grade());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      if ((ma[i] & mb[j]) != 0 || b[j] == 0.0) continue;
      out[basis_position(n, ma[i] | mb[j])] += merge_sign(ma[i], mb[j]) * ai * b[j];
    }
  }
  return out;
}

} // namespace

std::span<const IndexMask> basis_masks(int n, int k) {
  check_dimension(n);
  if (k < 0 || k > n) throw Error("grade " + std::to_string(k) + " outside [0, n]");
  return tables().masks[n][k];
}

std::size_t basis_position(int n, IndexMask mask) { return tables().position[n][mask]; }

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

GradedArray::GradedArray(int dimension, int grade) : n_(dimension), k_(grade) {
  check_dimension(dimension);
  if (grade < 0 || grade > dimension) throw Error("grade " + std::to_string(grade) + " outside [0, n]");
  c_.assign(binomial(dimension, grade), 0.0);
}

double GradedArray::coefficient(IndexMask mask) const {
  if (std::popcount(static_cast<unsigned>(mask)) != k_) return 0.0;
  return c_[basis_position(n_, mask)];
}

double GradedArray::max_abs() const {
  double m = 0.0;
  for (double c : c_) m = std::max(m, std::abs(c));
  return m;
}

void GradedArray::accumulate(std::span<const int> indices, double c) {
  if (static_cast<int>(indices.size()) != k_) throw Error("index tuple length differs from grade");
  IndexMask mask = 0;
  const double sign = canonicalize(indices, n_, mask);
  if (sign != 0.0) c_[basis_position(n_, mask)] += sign * c;
}

void GradedArray::check_same_shape(const GradedArray& o) const {
  if (n_ != o.n_ || k_ != o.k_) throw Error("graded elements differ in dimension or grade");
}

MultiVector MultiVector::basis(int n, std::initializer_list<int> indices, double c) {
  return basis(n, std::span<const int>(indices.begin(), indices.size()), c);
}

MultiVector MultiVector::basis(int n, std::span<const int> indices, double c) {
  MultiVector t(n, static_cast<int>(indices.size()));
  t.accumulate(indices, c);
  if (t.is_zero()) {
    t.witness_ = std::vector<Vec>(indices.size(), Vec::Zero(n));
  } else {
    std::vector<Vec> w;
    for (int i : indices) w.push_back(Vec::Unit(n, i - 1));
    if (!w.empty()) w.front() *= c;
    t.witness_ = std::move(w);
  }
  return t;
}

MultiVector MultiVector::scalar(int n, double s) {
  MultiVector t(n, 0);
  t[0] = s;
  t.witness_ = std::vector<Vec>{};
  return t;
}

MultiVector MultiVector::vector(const Vec& v) {
  const int n = static_cast<int>(v.size());
  MultiVector t(n, 1);
  for (int i = 0; i < n; ++i) t[i] = v[i];
  t.witness_ = std::vector<Vec>{v};
  return t;
}

MultiVector MultiVector::from_vectors(std::span<const Vec> vectors, int n) {
  MultiVector t = scalar(n, 1.0);
  for (const Vec& v : vectors) {
    if (v.size() != n) throw Error("from_vectors: vector dimension mismatch");
    t = wedge(t, vector(v));
  }
  return t;
}

void MultiVector::set_witness(std::vector<Vec> w) {
  if (static_cast<int>(w.size()) != k_) throw Error("witness length differs from grade");
  for (const Vec& v : w)
    if (v.size() != n_) throw Error("witness vector dimension mismatch");
  witness_ = std::move(w);
}

MultiVector& MultiVector::operator+=(const MultiVector& o) {
  check_same_shape(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  witness_.reset();
  return *this;
}

MultiVector& MultiVector::operator-=(const MultiVector& o) {
  check_same_shape(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  witness_.reset();
  return *this;
}

MultiVector& MultiVector::operator*=(double s) {
  for (double& c : c_) c *= s;
  if (witness_ && !witness_->empty()) witness_->front() *= s;
  return *this;
}

CoVector CoVector::basis(int n, std::initializer_list<int> indices, double c) {
  return basis(n, std::span<const int>(indices.begin(), indices.size()), c);
}

CoVector CoVector::basis(int n, std::span<const int> indices, double c) {
  CoVector w(n, static_cast<int>(indices.size()));
  w.accumulate(indices, c);
  return w;
}

CoVector CoVector::from_covector(const Vec& alpha) {
  CoVector w(static_cast<int>(alpha.size()), 1);
  for (int i = 0; i < alpha.size(); ++i) w[i] = alpha[i];
  return w;
}

CoVector& CoVector::operator+=(const CoVector& o) {
  check_same_shape(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

CoVector& CoVector::operator-=(const CoVector& o) {
  check_same_shape(o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

CoVector& CoVector::operator*=(double s) {
  for (double& c : c_) c *= s;
  return *this;
}

MultiVector wedge(const MultiVector& a, const MultiVector& b) {
  bool overflow = false;
  MultiVector out = wedge_impl(a, b, overflow);
  out.overflow_ = overflow;
  if (!overflow && a.witness() && b.witness()) {
    std::vector<Vec> w = *a.witness();
    w.insert(w.end(), b.witness()->begin(), b.witness()->end());
    // A grade-0 factor carries its scalar in the coefficient only.
    double scale = 1.0;
    if (a.grade() == 0) scale *= a[0];
    if (b.grade() == 0) scale *= b[0];
    if (!w.empty()) {
      w.front() *= scale;
      out.witness_ = std::move(w);
    } else {
      out.witness_ = std::vector<Vec>{};
    }
  }
  return out;
}

CoVector wedge(const CoVector& a, const CoVector& b) {
  bool overflow = false;
  CoVector out = wedge_impl(a, b, overflow);
  out.overflow_ = overflow;
  return out;
}

double pair(const MultiVector& t, const CoVector& w) {
  if (t.dimension() != w.dimension()) throw Error("pair: dimension mismatch");
  if (t.grade() != w.grade())
    throw Error("pair: grade mismatch (" + std::to_string(t.grade()) + " vs " + std::to_string(w.grade()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * w[i];
  return s;
}

MultiVector push_linear(const Mat& a, const MultiVector& t) {
  const int n = t.dimension();
  const int k = t.grade();
  if (a.cols() != n) throw Error("push_linear: matrix columns differ from dimension");
  const int m = static_cast<int>(a.rows());
  if (k > std::min(n, m)) throw Error("push_linear: grade exceeds min(n, m)");
  MultiVector out(m, k);
  const auto in_masks = basis_masks(n, k);
  const auto out_masks = basis_masks(m, k);
  std::vector<int> rows(k), cols(k);
  Mat minor(k, k);
  for (std::size_t i = 0; i < out_masks.size(); ++i) {
    int r = 0;
    for (IndexMask b = out_masks[i]; b != 0; b &= b - 1) rows[r++] = std::countr_zero(b);
    double acc = 0.0;
    for (std::size_t j = 0; j < in_masks.size(); ++j) {
      if (t[j] == 0.0) continue;
      int c = 0;
      for (IndexMask b = in_masks[j]; b != 0; b &= b - 1) cols[c++] = std::countr_zero(b);
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) minor(p, q) = a(rows[p], cols[q]);
      acc += (k == 0 ? 1.0 : minor.determinant()) * t[j];
    }
    out[i] = acc;
  }
  if (t.witness()) {
    std::vector<Vec> w;
    for (const Vec& v : *t.witness()) w.push_back(a * v);
    out.set_witness(std::move(w));
  }
  return out;
}

double simple_mass(const MultiVector& t) {
  const int k = t.grade();
  if (k == 0) return std::abs(t[0]);
  if (k == 1 || k == t.dimension()) {
    double s = 0.0;
    for (double c : t.coefficients()) s += c * c;
    return std::sqrt(s);
  }
  if (!t.witness()) throw Error("mass undefined without simple witness");
  const auto& w = *t.witness();
  Mat gram(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gram(i, j) = w[i].dot(w[j]);
  return std::sqrt(std::max(0.0, gram.determinant()));
}

double inner(const MultiVector& a, const MultiVector& b) {
  if (a.dimension() != b.dimension() || a.grade() != b.grade()) throw Error("inner: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

CoVector interior(const Vec& v, const CoVector& w) {
  const int n = w.dimension();
  const int k = w.grade();
  if (v.size() != n) throw Error("interior: dimension mismatch");
  if (k == 0) throw Error("interior: contraction of a 0-form");
  CoVector out(n, k - 1);
  const auto masks = basis_masks(n, k);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (w[i] == 0.0) continue;
    // i_v (dx_{i1} ^ ... ^ dx_{ik}) = sum_m (-1)^(m-1) v_{im} dx_{I \ im}
    int m = 0;
    for (IndexMask b = masks[i]; b != 0; b &= b - 1, ++m) {
      const int idx = std::countr_zero(b);
      const double sign = (m & 1) ? -1.0 : 1.0;
      const IndexMask rest = static_cast<IndexMask>(masks[i] & ~(1u << idx));
      out[basis_position(n, rest)] += sign * v[idx] * w[i];
    }
  }
  return out;
}

} // namespace gte
