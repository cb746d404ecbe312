#include "gntm/reference.hpp"

#include <algorithm>
#include <cmath>

#include "gntm/loss.hpp"
#include "gntm/ntm.hpp"

namespace gntm {

namespace {

using Real = long double;
using Vec = std::vector<Real>;

// W·x + b for a row-major W of shape rows × x.size().
Vec affine(const Tensor& w, const Tensor& b, const Vec& x) {
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  Vec y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    Real acc = b[i];
    for (std::size_t j = 0; j < cols; ++j) acc += static_cast<Real>(w(i, j)) * x[j];
    y[i] = acc;
  }
  return y;
}

Real logistic(Real x) { return 1.0L / (1.0L + std::exp(-x)); }

Vec join(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Vec gru(const GruParams& p, const Vec& h, const Vec& x) {
  const std::size_t n = h.size();
  const Vec hx = join(h, x);
  Vec z = affine(p.w_z, p.b_z, hx);
  Vec r = affine(p.w_r, p.b_r, hx);
  Vec rhx = hx;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = logistic(z[i]);
    r[i] = logistic(r[i]);
    rhx[i] *= r[i];
  }
  const Vec c = affine(p.w_h, p.b_h, rhx);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (1.0L - z[i]) * h[i] + z[i] * std::tanh(c[i]);
  return out;
}

Vec softmax_of(const Vec& v) {
  const Real top = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  Real sum = 0.0L;
  for (std::size_t i = 0; i < v.size(); ++i) sum += out[i] = std::exp(v[i] - top);
  for (auto& o : out) o /= sum;
  return out;
}

using Memory = std::vector<Vec>;

Vec weighting(const Memory& m, const Vec& key) {
  Real key_sq = 0.0L;
  for (Real k : key) key_sq += k * k;
  Vec sim(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    Real d = 0.0L, row_sq = 0.0L;
    for (std::size_t j = 0; j < key.size(); ++j) {
      d += m[i][j] * key[j];
      row_sq += m[i][j] * m[i][j];
    }
    sim[i] = d / std::max(std::sqrt(row_sq) * std::sqrt(key_sq), static_cast<Real>(kCosineFloor));
  }
  return softmax_of(sim);
}

}  // namespace

std::vector<long double> reference_probs(const ModelParams& p, const ModelConfig& cfg, const Tensor& window) {
  const std::size_t steps = cfg.window;
  std::vector<Vec> seq(steps);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t j = 0; j < cfg.input_features; ++j) seq[t].push_back(window(t, j));

  for (const GruParams* layer : {&p.gru1, &p.gru2}) {
    Vec h(layer->units(), 0.0L);
    for (auto& x : seq) x = h = gru(*layer, h, x);
  }

  const std::size_t rows = cfg.memory_rows, width = cfg.memory_width;
  Memory mem(rows, Vec(width, static_cast<Real>(kMemoryInit)));
  Vec read(width, 0.0L);
  Vec h(cfg.controller_units, 0.0L);
  const NtmParams& q = p.ntm;
  for (const auto& x : seq) {
    h = gru(q.controller, h, join(x, read));
    const Vec w_r = weighting(mem, affine(q.w_kr, q.b_kr, h));
    const Vec w_w = weighting(mem, affine(q.w_kw, q.b_kw, h));
    Vec add = affine(q.w_v, q.b_v, h);
    for (auto& a : add) a = std::tanh(a);
    Vec erase(width, 0.0L);
    if (!cfg.additive_write) {
      erase = affine(q.w_e, q.b_e, h);
      for (auto& e : erase) e = logistic(e);
    }
    std::fill(read.begin(), read.end(), 0.0L);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < width; ++j) read[j] += w_r[i] * mem[i][j];
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < width; ++j) mem[i][j] = mem[i][j] * (1.0L - w_w[i] * erase[j]) + w_w[i] * add[j];
  }

  Vec hidden = affine(p.dense1.w, p.dense1.b, join(h, read));
  for (auto& v : hidden) v = std::max(v, 0.0L);
  return softmax_of(affine(p.out.w, p.out.b, hidden));
}

long double reference_loss(const ModelParams& p, const ModelConfig& cfg, const Tensor& window, const Tensor& label) {
  const auto probs = reference_probs(p, cfg, window);
  Real loss = 0.0L;
  for (std::size_t c = 0; c < probs.size(); ++c)
    if (label[c] != 0.0) loss -= static_cast<Real>(label[c]) * std::log(std::max(probs[c], static_cast<Real>(kProbFloor)));
  return loss;
}

}  // namespace gntm
