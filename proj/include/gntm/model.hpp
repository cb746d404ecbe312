#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gntm/layers.hpp"
#include "gntm/ntm.hpp"
#include "gntm/tensor.hpp"

namespace gntm {

inline constexpr std::size_t kNumClasses = 3;

/// GRU(64, sequences) → GRU(32, sequences) → NTM → Dense(16, ReLU) → Dense(3, softmax)
struct ModelConfig {
  std::size_t input_features = 12;
  std::size_t window = 10;
  std::size_t gru1_units = 64;
  std::size_t gru2_units = 32;
  std::size_t memory_rows = 32;
  std::size_t memory_width = 20;
  std::size_t controller_units = 32;
  bool additive_write = false;
  std::size_t dense_units = 16;
  std::size_t classes = kNumClasses;

  NtmConfig ntm() const {
    return NtmConfig{gru2_units, memory_rows, memory_width, controller_units, additive_write};
  }
  void validate() const;

  /// F=4, T=3, GRU 5/4, NTM 4x3 memory; used for gradient checks.
  static ModelConfig tiny();

  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  GruParams gru1;
  GruParams gru2;
  NtmParams ntm;
  DenseParams dense1;
  DenseParams out;

  static ModelParams zeros(const ModelConfig& cfg);
  static ModelParams init(const ModelConfig& cfg, Rng& rng);

  /// Calls f(name, tensor) for every parameter in a fixed order
  /// ("gru1.w_z", …, "ntm.ctrl.w_z", …, "out.b").
  void for_each(const std::function<void(const std::string&, Tensor&)>& f);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& f) const;

  std::size_t parameter_count() const;
  void set_zero();
  bool operator==(const ModelParams& o) const;
};

struct ModelCache {
  std::vector<GruStepCache> gru1, gru2;
  std::vector<NtmStepCache> ntm;
  DenseCache dense1, out;
  Tensor probs;
};

/// Class probabilities for one T × F window.
Tensor forward(const ModelParams& p, const ModelConfig& cfg, const Tensor& window, ModelCache* cache = nullptr);

/// B × 3 probabilities for a batch of windows; row b equals forward(windows[b]).
Tensor forward_batch(const ModelParams& p, const ModelConfig& cfg, const std::vector<Tensor>& windows);

/// Accumulates ∂loss/∂θ for cross-entropy against a one-hot `label` into
/// `grads`, seeding the output layer with (probs − y). Returns ∂loss/∂window.
Tensor backward(const ModelParams& p, const ModelConfig& cfg, const ModelCache& cache, const Tensor& label,
                ModelParams& grads);

/// Forward + backward for one example; returns the loss.
double example_gradient(const ModelParams& p, const ModelConfig& cfg, const Tensor& window, const Tensor& label,
                        ModelParams& grads);

struct Prediction {
  std::size_t class_index = 0;
  Tensor probs;
};

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(const Tensor& v);
Prediction predict(const ModelParams& p, const ModelConfig& cfg, const Tensor& window);

struct GradCheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::size_t coordinates = 0;
  std::size_t tensors_covered = 0;
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  /// Largest gap between forward() and the long double reference outputs.
  double reference_max_diff = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  double epsilon = 1e-5;
  std::size_t min_coordinates = 200;
  /// Test hook applied to the analytic gradients before comparison.
  std::function<void(ModelParams&)> corrupt;
};

/// |a − b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Compares backward() against central differences of the long double
/// reference loss on a seeded random model, window and label. Every
/// parameter tensor gets at least one coordinate; the rest are sampled
/// uniformly up to `min_coordinates`.
GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opts);

}  // namespace gntm
