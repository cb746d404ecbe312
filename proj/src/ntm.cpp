#include "gntm/ntm.hpp"

#include <algorithm>
#include <cmath>

namespace gntm {

namespace {


Tensor project(const Tensor& w, const Tensor& b, const Tensor& h) {
  Tensor y = matvec(w, h);
  add_inplace(y, b);
  return y;
}

void check_memory_operands(const char* op, const Tensor& memory, const Tensor* w, const Tensor* vec) {
  if (memory.rank() != 2) throw DimensionError(std::string(op) + ": memory must be N x M, got " + shape_str(memory.shape()));
  if (w && (w->rank() != 1 || w->size() != memory.dim(0))) {
    throw DimensionError(std::string(op) + ": weighting " + shape_str(w->shape()) + " vs memory " +
                         shape_str(memory.shape()));
  }
  if (vec && (vec->rank() != 1 || vec->size() != memory.dim(1))) {
    throw DimensionError(std::string(op) + ": vector " + shape_str(vec->shape()) + " vs memory " +
                         shape_str(memory.shape()));
  }
}

// Backward of address(): accumulates into d_memory and d_key.
void address_backward(const Tensor& memory, const Tensor& key, const Tensor& w, const Tensor& d_w, Tensor& d_memory,
                      Tensor& d_key) {
  const std::size_t rows = memory.dim(0), width = memory.dim(1);
  double weighted = 0.0;
  for (std::size_t i = 0; i < rows; ++i) weighted += w[i] * d_w[i];

  const double key_norm = norm(key.data());
  for (std::size_t i = 0; i < rows; ++i) {
    const double d_sim = w[i] * (d_w[i] - weighted);
    if (d_sim == 0.0) continue;
    auto row = memory.row(i);
    auto d_row = d_memory.row(i);
    const double row_norm = norm(row);
    const double den = row_norm * key_norm;
    if (den > kCosineFloor) {
      const double c = dot(row, key.data()) / den;
      for (std::size_t j = 0; j < width; ++j) {
        d_key[j] += d_sim * (row[j] / den - c * key[j] / (key_norm * key_norm));
        d_row[j] += d_sim * (key[j] / den - c * row[j] / (row_norm * row_norm));
      }
    } else {
      for (std::size_t j = 0; j < width; ++j) {
        d_key[j] += d_sim * row[j] / kCosineFloor;
        d_row[j] += d_sim * key[j] / kCosineFloor;
      }
    }
  }
}

void projection_backward(const Tensor& w, const Tensor& d_y, const Tensor& h, Tensor& d_w, Tensor& d_b, Tensor& d_h) {
  add_outer(d_w, d_y, h);
  add_inplace(d_b, d_y);
  add_inplace(d_h, matvec_transposed(w, d_y));
}

}  // namespace

void NtmConfig::validate() const {
  if (memory_rows < 1 || memory_width < 1 || controller_units < 1 || input_dim < 1) {
    throw std::invalid_argument("NtmConfig: memory rows/width, controller units and input dim must be >= 1");
  }
}

NtmParams NtmParams::zeros(const NtmConfig& cfg) {
  cfg.validate();
  const Shape proj{cfg.memory_width, cfg.controller_units};
  const Shape bias{cfg.memory_width};
  return NtmParams{GruParams::zeros(cfg.controller_units, cfg.input_dim + cfg.memory_width),
                   Tensor(proj), Tensor(bias), Tensor(proj), Tensor(bias),
                   Tensor(proj), Tensor(bias), Tensor(proj), Tensor(bias)};
}

NtmParams NtmParams::glorot(const NtmConfig& cfg, Rng& rng) {
  NtmParams p = zeros(cfg);
  p.controller = GruParams::glorot(cfg.controller_units, cfg.input_dim + cfg.memory_width, rng);
  for (Tensor* w : {&p.w_kr, &p.w_kw, &p.w_v, &p.w_e}) glorot_fill(*w, cfg.controller_units, cfg.memory_width, rng);
  return p;
}

NtmState ntm_initial_state(const NtmConfig& cfg) {
  cfg.validate();
  const double uniform = 1.0 / static_cast<double>(cfg.memory_rows);
  return NtmState{Tensor::filled({cfg.memory_rows, cfg.memory_width}, kMemoryInit),
                  Tensor({cfg.memory_width}),
                  GruState{Tensor({cfg.controller_units})},
                  Tensor::filled({cfg.memory_rows}, uniform),
                  Tensor::filled({cfg.memory_rows}, uniform)};
}

Tensor cosine_similarity(const Tensor& memory, const Tensor& key) {
  check_memory_operands("address", memory, nullptr, &key);
  const double key_norm = norm(key.data());
  Tensor sim({memory.dim(0)});
  for (std::size_t i = 0; i < memory.dim(0); ++i) {
    auto row = memory.row(i);
    sim[i] = dot(row, key.data()) / std::max(norm(row) * key_norm, kCosineFloor);
  }
  return sim;
}

Tensor address(const Tensor& memory, const Tensor& key) { return softmax(cosine_similarity(memory, key)); }

Tensor read(const Tensor& memory, const Tensor& w) {
  check_memory_operands("read", memory, &w, nullptr);
  Tensor r({memory.dim(1)});
  for (std::size_t i = 0; i < memory.dim(0); ++i) {
    auto row = memory.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += w[i] * row[j];
  }
  return r;
}

Tensor write(const Tensor& memory, const Tensor& w, const Tensor& v, const Tensor& e) {
  check_memory_operands("write", memory, &w, &v);
  check_memory_operands("write", memory, nullptr, &e);
  Tensor out = memory;
  for (std::size_t i = 0; i < memory.dim(0); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * (1.0 - w[i] * e[j]) + w[i] * v[j];
  }
  require_finite(out, "write");
  return out;
}

NtmStepResult ntm_step(const NtmParams& p, const NtmConfig& cfg, const NtmState& state, const Tensor& x,
                       NtmStepCache* cache) {
  if (x.rank() != 1 || x.size() != cfg.input_dim) {
    throw DimensionError("ntm_step: input " + shape_str(x.shape()) + " vs input_dim " + std::to_string(cfg.input_dim));
  }
  Tensor controller_in = concat(x, state.read);
  GruStepCache ctrl_cache;
  Tensor h = gru_step(p.controller, state.controller.h, controller_in, cache ? &ctrl_cache : nullptr);

  Tensor key_read = project(p.w_kr, p.b_kr, h);
  Tensor key_write = project(p.w_kw, p.b_kw, h);
  Tensor add = elementwise(Op::tanh, project(p.w_v, p.b_v, h));
  Tensor erase = cfg.additive_write ? Tensor({cfg.memory_width})
                                    : elementwise(Op::sigmoid, project(p.w_e, p.b_e, h));

  Tensor w_read = address(state.memory, key_read);
  Tensor r = read(state.memory, w_read);
  Tensor w_write = address(state.memory, key_write);
  Tensor memory = write(state.memory, w_write, add, erase);

  NtmStepResult out{concat(h, r), NtmState{std::move(memory), r, GruState{h}, w_read, w_write}};
  if (cache) {
    *cache = NtmStepCache{state.memory,          std::move(controller_in), std::move(ctrl_cache), h,
                          std::move(key_read),   std::move(key_write),     std::move(add),        std::move(erase),
                          std::move(w_read),     std::move(w_write)};
  }
  return out;
}

NtmStateGrads ntm_zero_state_grads(const NtmConfig& cfg) {
  return NtmStateGrads{Tensor({cfg.memory_rows, cfg.memory_width}), Tensor({cfg.memory_width}),
                       Tensor({cfg.controller_units})};
}

NtmStateGrads ntm_step_backward(const NtmParams& p, const NtmConfig& cfg, const NtmStepCache& c,
                                const Tensor& d_output, const NtmStateGrads& d_next, NtmParams& grads, Tensor& d_x) {
  const std::size_t units = cfg.controller_units;
  const std::size_t rows = cfg.memory_rows, width = cfg.memory_width;
  if (d_output.size() != units + width) throw DimensionError("ntm_step_backward: output gradient has wrong length");

  Tensor d_h = slice(d_output, 0, units);
  add_inplace(d_h, d_next.controller);
  Tensor d_r = slice(d_output, units, width);
  add_inplace(d_r, d_next.read);

  const Tensor& mem = c.memory_prev;
  const Tensor& d_mem_next = d_next.memory;
  Tensor d_mem({rows, width});
  Tensor d_w_write({rows}), d_add({width}), d_erase({width});

  // Write: M'_ij = M_ij (1 − w_i e_j) + w_i v_j
  for (std::size_t i = 0; i < rows; ++i) {
    const double wi = c.w_write[i];
    auto row = mem.row(i);
    auto g = d_mem_next.row(i);
    auto d_row = d_mem.row(i);
    for (std::size_t j = 0; j < width; ++j) {
      d_row[j] = g[j] * (1.0 - wi * c.erase[j]);
      d_w_write[i] += g[j] * (c.add[j] - row[j] * c.erase[j]);
      d_erase[j] -= g[j] * row[j] * wi;
      d_add[j] += g[j] * wi;
    }
  }
  Tensor d_key_write({width});
  address_backward(mem, c.key_write, c.w_write, d_w_write, d_mem, d_key_write);

  // Read: r_j = Σ_i w_i M_ij
  Tensor d_w_read({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    auto row = mem.row(i);
    auto d_row = d_mem.row(i);
    d_w_read[i] = dot(row, d_r.data());
    for (std::size_t j = 0; j < width; ++j) d_row[j] += c.w_read[i] * d_r[j];
  }
  Tensor d_key_read({width});
  address_backward(mem, c.key_read, c.w_read, d_w_read, d_mem, d_key_read);

  const Tensor& h_out = c.controller_out;
  projection_backward(p.w_kr, d_key_read, h_out, grads.w_kr, grads.b_kr, d_h);
  projection_backward(p.w_kw, d_key_write, h_out, grads.w_kw, grads.b_kw, d_h);
  for (std::size_t j = 0; j < width; ++j) d_add[j] *= 1.0 - c.add[j] * c.add[j];
  projection_backward(p.w_v, d_add, h_out, grads.w_v, grads.b_v, d_h);
  if (!cfg.additive_write) {
    for (std::size_t j = 0; j < width; ++j) d_erase[j] *= c.erase[j] * (1.0 - c.erase[j]);
    projection_backward(p.w_e, d_erase, h_out, grads.w_e, grads.b_e, d_h);
  }

  GruInputGrads g = gru_step_backward(p.controller, c.controller, d_h, grads.controller);
  d_x = slice(g.d_x, 0, cfg.input_dim);
  return NtmStateGrads{std::move(d_mem), slice(g.d_x, cfg.input_dim, width), std::move(g.d_h_prev)};
}

Tensor ntm_sequence(const NtmParams& p, const NtmConfig& cfg, const Tensor& xs, std::vector<NtmStepCache>* caches) {
  if (xs.rank() != 2 || xs.dim(1) != cfg.input_dim) {
    throw DimensionError("ntm_sequence: expected T x " + std::to_string(cfg.input_dim) + ", got " +
                         shape_str(xs.shape()));
  }
  const std::size_t steps = xs.dim(0);
  if (steps == 0) throw std::invalid_argument("ntm_sequence: empty sequence");
  if (caches) caches->assign(steps, NtmStepCache{});

  NtmState state = ntm_initial_state(cfg);
  Tensor output;
  for (std::size_t t = 0; t < steps; ++t) {
    NtmStepResult step = ntm_step(p, cfg, state, xs.row_vector(t), caches ? &(*caches)[t] : nullptr);
    state = std::move(step.state);
    output = std::move(step.output);
  }
  return output;
}

Tensor ntm_sequence_backward(const NtmParams& p, const NtmConfig& cfg, const std::vector<NtmStepCache>& caches,
                             const Tensor& d_output, NtmParams& grads) {
  const std::size_t steps = caches.size();
  Tensor d_xs({steps, cfg.input_dim});
  NtmStateGrads d_state = ntm_zero_state_grads(cfg);
  const Tensor no_output({cfg.output_dim()});
  for (std::size_t t = steps; t-- > 0;) {
    Tensor d_x;
    d_state = ntm_step_backward(p, cfg, caches[t], t + 1 == steps ? d_output : no_output, d_state, grads, d_x);
    std::copy(d_x.values().begin(), d_x.values().end(), d_xs.row(t).begin());
  }
  return d_xs;
}

}  // namespace gntm
