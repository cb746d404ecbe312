#include "gntm/layers.hpp"

#include <algorithm>
#include <cmath>

namespace gntm {

void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data()) v = rng.uniform(-limit, limit);
}

GruParams GruParams::zeros(std::size_t units, std::size_t input_dim) {
  const Shape w{units, units + input_dim};
  return GruParams{Tensor(w), Tensor(w), Tensor(w), Tensor({units}), Tensor({units}), Tensor({units})};
}

GruParams GruParams::glorot(std::size_t units, std::size_t input_dim, Rng& rng) {
  GruParams p = zeros(units, input_dim);
  for (Tensor* w : {&p.w_z, &p.w_r, &p.w_h}) glorot_fill(*w, units + input_dim, units, rng);
  return p;
}

namespace {

void check_gru_inputs(const GruParams& p, const Tensor& h_prev, const Tensor& x) {
  if (h_prev.rank() != 1 || h_prev.size() != p.units()) {
    throw DimensionError("gru_step: hidden state " + shape_str(h_prev.shape()) + " does not match " +
                         std::to_string(p.units()) + " units");
  }
  if (x.rank() != 1 || x.size() != p.input_dim()) {
    throw DimensionError("gru_step: input " + shape_str(x.shape()) + " does not match input_dim " +
                         std::to_string(p.input_dim()));
  }
}

}  // namespace

Tensor gru_step(const GruParams& p, const Tensor& h_prev, const Tensor& x, GruStepCache* cache) {
  check_gru_inputs(p, h_prev, x);
  const std::size_t units = p.units();
  const Tensor hx = concat(h_prev, x);

  Tensor z = matvec(p.w_z, hx);
  Tensor r = matvec(p.w_r, hx);
  for (std::size_t i = 0; i < units; ++i) {
    z[i] = sigmoid(z[i] + p.b_z[i]);
    r[i] = sigmoid(r[i] + p.b_r[i]);
  }

  Tensor rhx = hx;
  for (std::size_t i = 0; i < units; ++i) rhx[i] *= r[i];
  Tensor h_cand = matvec(p.w_h, rhx);
  for (std::size_t i = 0; i < units; ++i) h_cand[i] = std::tanh(h_cand[i] + p.b_h[i]);

  Tensor h(Shape{units});
  for (std::size_t i = 0; i < units; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * h_cand[i];
  require_finite(h, "gru_step");

  if (cache) *cache = GruStepCache{h_prev, x, std::move(z), std::move(r), std::move(h_cand)};
  return h;
}

GruInputGrads gru_step_backward(const GruParams& p, const GruStepCache& c, const Tensor& d_h, GruParams& grads) {
  const std::size_t units = p.units();
  const std::size_t in = p.input_dim();
  if (d_h.size() != units) throw DimensionError("gru_step_backward: upstream gradient has wrong length");

  Tensor d_zpre(Shape{units}), d_hpre(Shape{units});
  Tensor d_h_prev(Shape{units});
  for (std::size_t i = 0; i < units; ++i) {
    const double z = c.z[i];
    const double hc = c.h_cand[i];
    d_zpre[i] = d_h[i] * (hc - c.h_prev[i]) * z * (1.0 - z);
    d_hpre[i] = d_h[i] * z * (1.0 - hc * hc);
    d_h_prev[i] = d_h[i] * (1.0 - z);
  }

  // Candidate path through [r∘h, x].
  const Tensor hx = concat(c.h_prev, c.x);
  Tensor rhx = hx;
  for (std::size_t i = 0; i < units; ++i) rhx[i] *= c.r[i];
  add_outer(grads.w_h, d_hpre, rhx);
  add_inplace(grads.b_h, d_hpre);
  const Tensor d_rhx = matvec_transposed(p.w_h, d_hpre);

  Tensor d_rpre(Shape{units});
  for (std::size_t i = 0; i < units; ++i) {
    const double r = c.r[i];
    d_rpre[i] = d_rhx[i] * c.h_prev[i] * r * (1.0 - r);
    d_h_prev[i] += d_rhx[i] * r;
  }

  // Gate paths through [h, x].
  add_outer(grads.w_z, d_zpre, hx);
  add_outer(grads.w_r, d_rpre, hx);
  add_inplace(grads.b_z, d_zpre);
  add_inplace(grads.b_r, d_rpre);
  const Tensor d_hx_z = matvec_transposed(p.w_z, d_zpre);
  const Tensor d_hx_r = matvec_transposed(p.w_r, d_rpre);

  Tensor d_x(Shape{in});
  for (std::size_t i = 0; i < units; ++i) d_h_prev[i] += d_hx_z[i] + d_hx_r[i];
  for (std::size_t j = 0; j < in; ++j) d_x[j] = d_rhx[units + j] + d_hx_z[units + j] + d_hx_r[units + j];
  return {std::move(d_h_prev), std::move(d_x)};
}

Tensor gru_sequence(const GruParams& p, const Tensor& xs, bool return_sequences, std::vector<GruStepCache>* caches) {
  if (xs.rank() != 2) throw DimensionError("gru_sequence: expected T x input_dim, got " + shape_str(xs.shape()));
  const std::size_t steps = xs.dim(0);
  if (steps == 0) throw std::invalid_argument("gru_sequence: empty sequence");
  const std::size_t units = p.units();

  if (caches) caches->assign(steps, GruStepCache{});
  Tensor h(Shape{units});
  Tensor seq(Shape{steps, units});
  for (std::size_t t = 0; t < steps; ++t) {
    h = gru_step(p, h, xs.row_vector(t), caches ? &(*caches)[t] : nullptr);
    std::copy(h.values().begin(), h.values().end(), seq.row(t).begin());
  }
  return return_sequences ? seq : h;
}

Tensor gru_sequence_backward(const GruParams& p, const std::vector<GruStepCache>& caches, const Tensor& d_out,
                             GruParams& grads) {
  const std::size_t steps = caches.size();
  const std::size_t units = p.units();
  const bool sequences = d_out.rank() == 2;
  if (sequences ? (d_out.dim(0) != steps || d_out.dim(1) != units) : d_out.size() != units) {
    throw DimensionError("gru_sequence_backward: upstream gradient " + shape_str(d_out.shape()));
  }

  Tensor d_xs(Shape{steps, p.input_dim()});
  Tensor d_h(Shape{units});
  if (!sequences) d_h = d_out;
  for (std::size_t t = steps; t-- > 0;) {
    if (sequences) {
      auto r = d_out.row(t);
      for (std::size_t i = 0; i < units; ++i) d_h[i] += r[i];
    }
    GruInputGrads g = gru_step_backward(p, caches[t], d_h, grads);
    std::copy(g.d_x.values().begin(), g.d_x.values().end(), d_xs.row(t).begin());
    d_h = std::move(g.d_h_prev);
  }
  return d_xs;
}

DenseParams DenseParams::zeros(std::size_t out, std::size_t in) { return {Tensor({out, in}), Tensor({out})}; }

DenseParams DenseParams::glorot(std::size_t out, std::size_t in, Rng& rng) {
  DenseParams p = zeros(out, in);
  glorot_fill(p.w, in, out, rng);
  return p;
}

Tensor dense_forward(const DenseParams& p, const Tensor& x, Activation act, DenseCache* cache) {
  Tensor pre = matvec(p.w, x);
  add_inplace(pre, p.b);
  Tensor y = act == Activation::relu ? elementwise(Op::relu, pre) : pre;
  if (cache) *cache = DenseCache{x, std::move(pre), act};
  return y;
}

Tensor dense_backward(const DenseParams& p, const DenseCache& c, const Tensor& d_y, DenseParams& grads) {
  if (d_y.size() != p.b.size()) throw DimensionError("dense_backward: upstream gradient has wrong length");
  Tensor d_pre = d_y;
  if (c.act == Activation::relu) {
    for (std::size_t i = 0; i < d_pre.size(); ++i)
      if (c.pre[i] <= 0.0) d_pre[i] = 0.0;
  }
  add_outer(grads.w, d_pre, c.x);
  add_inplace(grads.b, d_pre);
  return matvec_transposed(p.w, d_pre);
}

Tensor softmax(const Tensor& x) {
  if (x.size() == 0) throw DimensionError("softmax of an empty vector");
  double mx = x[0];
  for (double v : x.data()) mx = std::max(mx, v);
  Tensor out(x.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (auto& v : out.data()) v /= sum;
  return out;
}

}  // namespace gntm
