#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gte/error.hpp"

namespace gte {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr int kMaxDimension = 8;

// Bit i set <=> basis index i+1 present. Only the low n bits are used.
using IndexMask = std::uint16_t;

// Increasing k-subsets of {1..n} in lexicographic order.
std::span<const IndexMask> basis_masks(int n, int k);
std::size_t basis_position(int n, IndexMask mask);
std::size_t binomial(int n, int k);

// Dense storage over the lexicographic basis of a fixed grade.
class GradedArray {
public:
  GradedArray() = default;
  GradedArray(int dimension, int grade);

  int dimension() const { return n_; }
  int grade() const { return k_; }
  std::size_t size() const { return c_.size(); }

  std::span<const double> coefficients() const { return c_; }
  std::span<double> coefficients() { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }

  double coefficient(IndexMask mask) const;
  double max_abs() const;
  bool is_zero() const { return max_abs() == 0.0; }

protected:
  // Adds c to the element indexed by an arbitrary 1-based tuple, sorting
  // with sign; repeated indices contribute nothing.
  void accumulate(std::span<const int> indices, double c);
  void check_same_shape(const GradedArray& other) const;

  int n_ = 0;
  int k_ = 0;
  std::vector<double> c_;
};

// Element of the k-th exterior power of R^n. Optionally carries a witness
// factorization v1 ^ ... ^ vk, which is what makes its mass computable.
class MultiVector : public GradedArray {
public:
  MultiVector() = default;
  MultiVector(int dimension, int grade) : GradedArray(dimension, grade) {}

  static MultiVector basis(int n, std::initializer_list<int> indices, double c = 1.0);
  static MultiVector basis(int n, std::span<const int> indices, double c = 1.0);
  static MultiVector scalar(int n, double s);
  static MultiVector vector(const Vec& v);
  static MultiVector from_vectors(std::span<const Vec> vectors, int n);

  const std::optional<std::vector<Vec>>& witness() const { return witness_; }
  void set_witness(std::vector<Vec> w);
  void drop_witness() { witness_.reset(); }

  // Set when produced by a wedge whose grades overflowed the dimension.
  bool overflow() const { return overflow_; }

  MultiVector& operator+=(const MultiVector& o);
  MultiVector& operator-=(const MultiVector& o);
  MultiVector& operator*=(double s);
  friend MultiVector operator+(MultiVector a, const MultiVector& b) { return a += b; }
  friend MultiVector operator-(MultiVector a, const MultiVector& b) { return a -= b; }
  friend MultiVector operator*(double s, MultiVector a) { return a *= s; }
  friend MultiVector operator*(MultiVector a, double s) { return a *= s; }

private:
  friend MultiVector wedge(const MultiVector&, const MultiVector&);
  std::optional<std::vector<Vec>> witness_;
  bool overflow_ = false;
};

// Element of the k-th exterior power of the dual of R^n.
class CoVector : public GradedArray {
public:
  CoVector() = default;
  CoVector(int dimension, int grade) : GradedArray(dimension, grade) {}

  static CoVector basis(int n, std::initializer_list<int> indices, double c = 1.0);
  static CoVector basis(int n, std::span<const int> indices, double c = 1.0);
  static CoVector from_covector(const Vec& alpha);

  bool overflow() const { return overflow_; }

  CoVector& operator+=(const CoVector& o);
  CoVector& operator-=(const CoVector& o);
  CoVector& operator*=(double s);
  friend CoVector operator+(CoVector a, const CoVector& b) { return a += b; }
  friend CoVector operator-(CoVector a, const CoVector& b) { return a -= b; }
  friend CoVector operator*(double s, CoVector a) { return a *= s; }

private:
  friend CoVector wedge(const CoVector&, const CoVector&);
  bool overflow_ = false;
};

// Bilinear, associative, graded-anticommutative. Grade overflow yields the
// zero element of grade n with overflow() set.
MultiVector wedge(const MultiVector& a, const MultiVector& b);
CoVector wedge(const CoVector& a, const CoVector& b);

// Duality pairing; grade or dimension mismatch throws.
double pair(const MultiVector& t, const CoVector& w);

// Lambda^k A applied to t; coefficients are the k x k minors of A.
MultiVector push_linear(const Mat& a, const MultiVector& t);

// sqrt(det Gram(v1..vk)) from the witness; grades 0, 1 and n need none.
double simple_mass(const MultiVector& t);

// Euclidean inner product of coefficient arrays.
double inner(const MultiVector& a, const MultiVector& b);

// Contraction i_v w in the first slot, v a 1-vector; grade k-1 result.
CoVector interior(const Vec& v, const CoVector& w);

} // namespace gte
