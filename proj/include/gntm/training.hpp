#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gntm/data.hpp"
#include "gntm/model.hpp"

namespace gntm {

struct TrainConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 4;
  double val_fraction = 0.2;
  double reduce_fraction = 0.2;
  std::uint64_t seed = 7;
  /// Minimum val-loss decrease that counts as an improvement.
  double min_improvement = 1e-6;
  /// When false the seconds column is written as 0 so logs compare byte-for-byte.
  bool record_time = true;

  void validate() const;
};

/// Adam moments for a flat list of tensors.
struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t t = 0;

  static AdamState for_params(const ModelParams& params);
};

/// One Adam update over parallel lists of parameters and gradients. The step
/// counter is incremented before bias correction.
void adam_step(AdamState& state, const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               const TrainConfig& cfg);
void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads, const TrainConfig& cfg);

/// Tracks the best validation loss and counts epochs without improvement.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_improvement);

  /// Records the loss for `epoch` (1-based). Returns true when this epoch is
  /// the new best.
  bool observe(std::size_t epoch, double val_loss);
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  double min_improvement_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  std::size_t stale_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double seconds = 0.0;
};

inline constexpr const char* kEpochLogHeader = "epoch,train_loss,train_acc,val_loss,val_acc,seconds";

void write_epoch_log(std::ostream& out, const std::vector<EpochLog>& logs);
void write_epoch_log(const std::string& path, const std::vector<EpochLog>& logs);
std::vector<EpochLog> read_epoch_log(const std::string& path);

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  NormStats norm;
  std::uint32_t epoch = 0;
  double val_loss = 0.0;
  std::uint64_t seed = 0;
};

/// Raised when training produces a non-finite loss or value.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean loss and accuracy over a split, full pass.
struct SplitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};
SplitMetrics evaluate_split(const ModelParams& p, const ModelConfig& cfg, const std::vector<LabeledWindow>& data);

struct TrainCallbacks {
  std::function<void(const EpochLog&, const ModelParams&)> on_epoch_end;
  /// Replaces the measured val loss; used to drive early stopping in tests.
  std::function<double(std::size_t epoch, double measured)> val_loss_override;
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> logs;
  bool stopped_early = false;
};

/// Seeded per-epoch shuffle, mean-gradient Adam updates over batches (the
/// last partial batch included), then full-pass metrics on both splits.
/// Stops after `max_epochs` or `patience` epochs without improvement and
/// returns the best epoch's weights.
TrainResult train(const ModelConfig& model_cfg, const std::vector<LabeledWindow>& train_set,
                  const std::vector<LabeledWindow>& val_set, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks = {}, const NormStats& norm = {});

}  // namespace gntm
