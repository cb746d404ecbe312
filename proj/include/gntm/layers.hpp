#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gntm/tensor.hpp"

namespace gntm {

/// GRU cell weights over the concatenated input [h_{t-1}, x_t].
/// Every weight matrix is units × (units + input_dim).
struct GruParams {
  Tensor w_z, w_r, w_h;
  Tensor b_z, b_r, b_h;

  static GruParams zeros(std::size_t units, std::size_t input_dim);
  /// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases.
  static GruParams glorot(std::size_t units, std::size_t input_dim, Rng& rng);

  std::size_t units() const { return b_z.size(); }
  std::size_t input_dim() const { return w_z.dim(1) - units(); }

  /// Visits (suffix, tensor) pairs in a fixed order.
  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("w_z", self.w_z);
    f("w_r", self.w_r);
    f("w_h", self.w_h);
    f("b_z", self.b_z);
    f("b_r", self.b_r);
    f("b_h", self.b_h);
  }
};

struct GruState {
  Tensor h;
};

/// Everything the backward pass of one step needs.
struct GruStepCache {
  Tensor h_prev, x;
  Tensor z, r, h_cand;
};

/// One GRU step:
///   z = σ(W_z·[h, x] + b_z)
///   r = σ(W_r·[h, x] + b_r)
///   h̃ = tanh(W_h·[r∘h, x] + b_h)
///   h' = (1 − z)∘h + z∘h̃
Tensor gru_step(const GruParams& p, const Tensor& h_prev, const Tensor& x, GruStepCache* cache = nullptr);

struct GruInputGrads {
  Tensor d_h_prev;
  Tensor d_x;
};

/// Backward of gru_step. Parameter gradients are accumulated into `grads`.
GruInputGrads gru_step_backward(const GruParams& p, const GruStepCache& cache, const Tensor& d_h,
                                GruParams& grads);

/// Runs the cell over the rows of xs (T × input_dim) from a zero state.
/// Returns T × units when return_sequences is set, else the final state.
Tensor gru_sequence(const GruParams& p, const Tensor& xs, bool return_sequences,
                    std::vector<GruStepCache>* caches = nullptr);

/// Backward of gru_sequence. `d_out` is T × units (return_sequences) or
/// a units vector (final state only). Returns d_xs, T × input_dim.
Tensor gru_sequence_backward(const GruParams& p, const std::vector<GruStepCache>& caches, const Tensor& d_out,
                             GruParams& grads);

enum class Activation { none, relu };

struct DenseParams {
  Tensor w;  // out × in
  Tensor b;  // out

  static DenseParams zeros(std::size_t out, std::size_t in);
  static DenseParams glorot(std::size_t out, std::size_t in, Rng& rng);

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f("w", self.w);
    f("b", self.b);
  }
};

struct DenseCache {
  Tensor x;
  Tensor pre;
  Activation act = Activation::none;
};

/// y = act(W·x + b)
Tensor dense_forward(const DenseParams& p, const Tensor& x, Activation act, DenseCache* cache = nullptr);
/// Returns d_x; accumulates into grads.
Tensor dense_backward(const DenseParams& p, const DenseCache& cache, const Tensor& d_y, DenseParams& grads);

/// Max-shifted softmax.
Tensor softmax(const Tensor& x);

/// Fills `t` with Glorot-uniform samples for a fan_in → fan_out map.
void glorot_fill(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace gntm
