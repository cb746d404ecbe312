#pragma once

#include <vector>

#include "gntm/layers.hpp"
#include "gntm/tensor.hpp"

namespace gntm {

/// Lower bound on ‖M_i‖·‖k‖ in cosine similarity.
inline constexpr double kCosineFloor = 1e-8;
/// Value every memory cell starts from.
inline constexpr double kMemoryInit = 1e-6;

struct NtmConfig {
  std::size_t input_dim = 32;
  std::size_t memory_rows = 32;
  std::size_t memory_width = 20;
  std::size_t controller_units = 32;
  /// Skip the erase step: M' = M + w ⊗ v.
  bool additive_write = false;

  std::size_t output_dim() const { return controller_units + memory_width; }
  void validate() const;
};

/// Controller plus the four head projections. Each projection maps the
/// controller state to a memory-width vector:
///   read key k_r = W_kr·h + b_kr        write key k_w = W_kw·h + b_kw
///   add vector v = tanh(W_v·h + b_v)    erase vector e = σ(W_e·h + b_e)
struct NtmParams {
  GruParams controller;
  Tensor w_kr, b_kr;
  Tensor w_kw, b_kw;
  Tensor w_v, b_v;
  Tensor w_e, b_e;

  static NtmParams zeros(const NtmConfig& cfg);
  static NtmParams glorot(const NtmConfig& cfg, Rng& rng);

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    GruParams::visit(self.controller, [&](const char* name, auto& t) { f(std::string("ctrl.") + name, t); });
    f(std::string("w_kr"), self.w_kr);
    f(std::string("b_kr"), self.b_kr);
    f(std::string("w_kw"), self.w_kw);
    f(std::string("b_kw"), self.b_kw);
    f(std::string("w_v"), self.w_v);
    f(std::string("b_v"), self.b_v);
    f(std::string("w_e"), self.w_e);
    f(std::string("b_e"), self.b_e);
  }
};

struct NtmState {
  Tensor memory;        // N × M
  Tensor read;          // M
  GruState controller;  // controller_units
  Tensor w_read;        // N
  Tensor w_write;       // N
};

/// Memory filled with 1e-6, zero read vector and controller state, uniform
/// weightings.
NtmState ntm_initial_state(const NtmConfig& cfg);

/// Cosine similarity of every memory row with `key`, denominator clamped at 1e-8.
Tensor cosine_similarity(const Tensor& memory, const Tensor& key);
/// Content addressing: softmax over rows of cosine(M_i, key).
Tensor address(const Tensor& memory, const Tensor& key);
/// r = Mᵀ·w
Tensor read(const Tensor& memory, const Tensor& w);
/// M'_i = M_i ∘ (1 − w_i·e) + w_i·v
Tensor write(const Tensor& memory, const Tensor& w, const Tensor& v, const Tensor& e);

struct NtmStepCache {
  Tensor memory_prev;
  Tensor controller_in;
  GruStepCache controller;
  Tensor controller_out;
  Tensor key_read, key_write, add, erase;
  Tensor w_read, w_write;
};

struct NtmStepResult {
  Tensor output;  // [controller h, new read vector]
  NtmState state;
};

/// One step: the controller reads [x, previous read vector]; both heads
/// address the pre-write memory; read happens, then the write is applied.
NtmStepResult ntm_step(const NtmParams& p, const NtmConfig& cfg, const NtmState& state, const Tensor& x,
                       NtmStepCache* cache = nullptr);

/// Gradients flowing backwards out of a step, w.r.t. its inputs.
struct NtmStateGrads {
  Tensor memory;
  Tensor read;
  Tensor controller;
};

/// Backward of ntm_step. `d_output` is the gradient of the step output;
/// `d_next` is the gradient w.r.t. the state this step produced. Returns the
/// gradient w.r.t. the incoming state and writes d_x.
NtmStateGrads ntm_step_backward(const NtmParams& p, const NtmConfig& cfg, const NtmStepCache& cache,
                                const Tensor& d_output, const NtmStateGrads& d_next, NtmParams& grads, Tensor& d_x);

NtmStateGrads ntm_zero_state_grads(const NtmConfig& cfg);

/// Runs ntm_step over the rows of xs from the initial state and returns the
/// final step's output.
Tensor ntm_sequence(const NtmParams& p, const NtmConfig& cfg, const Tensor& xs,
                    std::vector<NtmStepCache>* caches = nullptr);

/// Backward of ntm_sequence given the gradient of the final output. Returns d_xs.
Tensor ntm_sequence_backward(const NtmParams& p, const NtmConfig& cfg, const std::vector<NtmStepCache>& caches,
                             const Tensor& d_output, NtmParams& grads);

}  // namespace gntm
