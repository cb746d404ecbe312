#include "gntm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gntm {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_rank(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("tensor rank must be 1..3, got shape " + shape_str(shape));
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  check_rank(shape_);
  data_.assign(product(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_rank(shape_);
  if (product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
  }
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::vector(std::initializer_list<double> values) { return vector(std::vector<double>(values)); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::span<double> Tensor::row(std::size_t i) {
  const std::size_t stride = data_.size() / shape_[0];
  return std::span<double>(data_).subspan(i * stride, stride);
}

std::span<const double> Tensor::row(std::size_t i) const {
  const std::size_t stride = data_.size() / shape_[0];
  return std::span<const double>(data_).subspan(i * stride, stride);
}

Tensor Tensor::row_vector(std::size_t i) const {
  auto r = row(i);
  return Tensor::vector(std::vector<double>(r.begin(), r.end()));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw DomainError(std::string(what) + ": non-finite value produced");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) mismatch("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a(i, p);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aip * b(p, j);
    }
  }
  require_finite(c, "matmul");
  return c;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.dim(1) != x.size()) mismatch("matvec", w, x);
  const std::size_t m = w.dim(0);
  Tensor y({m});
  for (std::size_t i = 0; i < m; ++i) y[i] = dot(w.row(i), x.data());
  require_finite(y, "matvec");
  return y;
}

Tensor matvec_transposed(const Tensor& w, const Tensor& y) {
  if (w.rank() != 2 || y.rank() != 1 || w.dim(0) != y.size()) mismatch("matvec_transposed", w, y);
  const std::size_t m = w.dim(0), k = w.dim(1);
  Tensor x({k});
  for (std::size_t i = 0; i < m; ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    auto r = w.row(i);
    for (std::size_t j = 0; j < k; ++j) x[j] += r[j] * yi;
  }
  require_finite(x, "matvec_transposed");
  return x;
}

void add_outer(Tensor& w, const Tensor& a, const Tensor& b) {
  if (w.rank() != 2 || w.dim(0) != a.size() || w.dim(1) != b.size()) mismatch("add_outer", w, a);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    auto r = w.row(i);
    for (std::size_t j = 0; j < b.size(); ++j) r[j] += ai * b[j];
  }
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose requires a matrix, got " + shape_str(a.shape()));
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t(j, i) = a(i, j);
  return t;
}

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor elementwise(Op op, const Tensor& a, const Tensor* b) {
  const bool binary = op == Op::add || op == Op::sub || op == Op::mul;
  Tensor out(a.shape());
  if (binary) {
    if (!b) throw std::invalid_argument("elementwise: binary op needs a second operand");
    const bool scalar = b->size() == 1 && a.shape() != b->shape();
    if (!scalar && a.shape() != b->shape()) mismatch("elementwise", a, *b);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double y = scalar ? (*b)[0] : (*b)[i];
      switch (op) {
        case Op::add: out[i] = a[i] + y; break;
        case Op::sub: out[i] = a[i] - y; break;
        default: out[i] = a[i] * y; break;
      }
    }
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double x = a[i];
      switch (op) {
        case Op::sigmoid: out[i] = sigmoid(x); break;
        case Op::tanh: out[i] = std::tanh(x); break;
        case Op::relu: out[i] = x > 0.0 ? x : 0.0; break;
        case Op::exp: out[i] = std::exp(x); break;
        case Op::log:
          if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
          out[i] = std::log(x);
          break;
        default: break;
      }
    }
  }
  require_finite(out, "elementwise");
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  require_finite(out, "scale");
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add_inplace", a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  if (a.rank() != b.rank() || axis >= a.rank()) mismatch("concat", a, b);
  for (std::size_t d = 0; d < a.rank(); ++d) {
    if (d != axis && a.dim(d) != b.dim(d)) mismatch("concat", a, b);
  }
  Shape shape = a.shape();
  shape[axis] += b.dim(axis);
  // View both operands as [outer × (dim(axis)·inner)] blocks and interleave.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= a.dim(d);
  for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.dim(d);
  const std::size_t ablock = a.dim(axis) * inner, bblock = b.dim(axis) * inner;
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  for (std::size_t o = 0; o < outer; ++o) {
    data.insert(data.end(), a.values().begin() + o * ablock, a.values().begin() + (o + 1) * ablock);
    data.insert(data.end(), b.values().begin() + o * bblock, b.values().begin() + (o + 1) * bblock);
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor slice(const Tensor& v, std::size_t begin, std::size_t len) {
  if (v.rank() != 1 || begin + len > v.size()) {
    throw DimensionError("slice [" + std::to_string(begin) + ", +" + std::to_string(len) + ") out of range for " +
                         shape_str(v.shape()));
  }
  return Tensor::vector(std::vector<double>(v.values().begin() + begin, v.values().begin() + begin + len));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  // Reject the final partial block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::vector<std::size_t> rng_permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace gntm
