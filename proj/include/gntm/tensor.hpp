#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gntm {

/// Raised when operand shapes do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a value leaves the domain of an operation (log of a
/// non-positive number, or a NaN/Inf produced by arithmetic).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles with rank 1, 2 or 3.
///
/// An empty shape is not allowed; a zero-length dimension is (it is used for
/// empty-width concatenation operands).
class Tensor {
 public:
  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor filled(Shape shape, double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Row i of a matrix (or the i-th leading slice of a rank-3 tensor).
  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i) const;
  /// Copy of a matrix row as a vector tensor.
  Tensor row_vector(std::size_t i) const;

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws DomainError naming `what` if the tensor holds NaN or Inf.
void require_finite(const Tensor& t, const char* what);

Tensor matmul(const Tensor& a, const Tensor& b);
/// W·x for W[m×k], x[k].
Tensor matvec(const Tensor& w, const Tensor& x);
/// Wᵀ·y for W[m×k], y[m].
Tensor matvec_transposed(const Tensor& w, const Tensor& y);
/// W += a ⊗ b for W[m×k], a[m], b[k].
void add_outer(Tensor& w, const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

enum class Op { add, sub, mul, sigmoid, tanh, relu, exp, log };

/// Unary ops ignore `b`. Binary ops require equal shapes or a one-element `b`.
Tensor elementwise(Op op, const Tensor& a, const Tensor* b = nullptr);
inline Tensor elementwise(Op op, const Tensor& a, const Tensor& b) { return elementwise(op, a, &b); }

Tensor scale(const Tensor& a, double s);
/// a += b in place, shapes must match.
void add_inplace(Tensor& a, const Tensor& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Concatenate along `axis`; every other dimension must agree.
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis = 0);
/// Elements [begin, begin+len) of a vector.
Tensor slice(const Tensor& v, std::size_t begin, std::size_t len);

double sigmoid(double x);

/// Seeded generator: std::mt19937_64 for the raw stream, with the
/// uniform/normal/bounded transforms written out here so that the derived
/// samples do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (second value discarded).
  double normal();
  /// Uniform integer in [0, n), rejection-sampled, n > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> rng_permutation(Rng& rng, std::size_t n);

}  // namespace gntm
