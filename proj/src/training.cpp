#include "gntm/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gntm/loss.hpp"

namespace gntm {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw std::invalid_argument("beta1 and beta2 must be in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val_fraction must be in (0, 1)");
  if (!(reduce_fraction > 0.0 && reduce_fraction <= 1.0))
    throw std::invalid_argument("reduce_fraction must be in (0, 1]");
  if (!(min_improvement >= 0.0)) throw std::invalid_argument("min_improvement must be >= 0");
}

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  params.for_each([&](const std::string&, const Tensor& t) {
    s.m.push_back(Tensor(t.shape()));
    s.v.push_back(Tensor(t.shape()));
  });
  return s;
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               const TrainConfig& cfg) {
  if (params.size() != grads.size()) throw DimensionError("adam_step: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.push_back(Tensor(p->shape()));
      state.v.push_back(Tensor(p->shape()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: state does not match parameters");
  ++state.t;
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k]->data();
    const auto g = grads[k]->values();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    if (theta.size() != g.size() || m.size() != g.size())
      throw DimensionError("adam_step: shape mismatch in tensor " + std::to_string(k));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads, const TrainConfig& cfg) {
  std::vector<Tensor*> p;
  std::vector<const Tensor*> g;
  params.for_each([&](const std::string&, Tensor& t) { p.push_back(&t); });
  grads.for_each([&](const std::string&, const Tensor& t) { g.push_back(&t); });
  adam_step(state, p, g, cfg);
}

EarlyStopping::EarlyStopping(std::size_t patience, double min_improvement)
    : patience_(patience), min_improvement_(min_improvement) {
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool EarlyStopping::observe(std::size_t epoch, double val_loss) {
  if (best_epoch_ == 0 || val_loss < best_loss_ - min_improvement_) {
    best_epoch_ = epoch;
    best_loss_ = val_loss;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

void write_epoch_log(std::ostream& out, const std::vector<EpochLog>& logs) {
  out << kEpochLogHeader << '\n';
  char line[256];
  for (const auto& e : logs) {
    std::snprintf(line, sizeof(line), "%zu,%.9f,%.6f,%.9f,%.6f,%.3f\n", e.epoch, e.train_loss, e.train_acc,
                  e.val_loss, e.val_acc, e.seconds);
    out << line;
  }
}

void write_epoch_log(const std::string& path, const std::vector<EpochLog>& logs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_epoch_log(out, logs);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<EpochLog> read_epoch_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kEpochLogHeader) throw std::runtime_error(path + ": not an epoch log");
  std::vector<EpochLog> logs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochLog e;
    if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf,%lf", &e.epoch, &e.train_loss, &e.train_acc, &e.val_loss,
                    &e.val_acc, &e.seconds) != 6)
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    logs.push_back(e);
  }
  return logs;
}

SplitMetrics evaluate_split(const ModelParams& p, const ModelConfig& cfg, const std::vector<LabeledWindow>& data) {
  SplitMetrics m;
  if (data.empty()) return m;
  std::size_t correct = 0;
  for (const auto& lw : data) {
    const Tensor probs = forward(p, cfg, lw.window);
    m.loss += cross_entropy(probs, lw.label);
    if (static_cast<int>(argmax(probs)) == lw.class_id()) ++correct;
  }
  m.loss /= static_cast<double>(data.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return m;
}

TrainResult train(const ModelConfig& model_cfg, const std::vector<LabeledWindow>& train_set,
                  const std::vector<LabeledWindow>& val_set, const TrainConfig& cfg, const TrainCallbacks& callbacks,
                  const NormStats& norm) {
  cfg.validate();
  model_cfg.validate();
  if (train_set.empty() || val_set.empty()) throw std::invalid_argument("train: train and val sets must be non-empty");

  Rng init_rng(derive_seed(cfg.seed, 10));
  Rng shuffle_rng(derive_seed(cfg.seed, 11));
  ModelParams params = ModelParams::init(model_cfg, init_rng);
  ModelParams grads = ModelParams::zeros(model_cfg);
  AdamState adam = AdamState::for_params(params);
  EarlyStopping stopper(cfg.patience, cfg.min_improvement);

  TrainResult result;
  result.best = Checkpoint{model_cfg, params, norm, 0, 0.0, cfg.seed};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = rng_permutation(shuffle_rng, train_set.size());
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      grads.set_zero();
      for (std::size_t i = b; i < end; ++i) {
        const LabeledWindow& ex = train_set[order[i]];
        double loss = 0.0;
        try {
          loss = example_gradient(params, model_cfg, ex.window, ex.label, grads);
        } catch (const DomainError& e) {
          throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(loss))
          throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": non-finite loss");
      }
      const double inv = 1.0 / static_cast<double>(end - b);
      grads.for_each([&](const std::string&, Tensor& t) {
        for (double& g : t.data()) g *= inv;
      });
      adam_step(adam, params, grads, cfg);
    }

    EpochLog log;
    log.epoch = epoch;
    try {
      const SplitMetrics tr = evaluate_split(params, model_cfg, train_set);
      const SplitMetrics va = evaluate_split(params, model_cfg, val_set);
      log.train_loss = tr.loss;
      log.train_acc = tr.accuracy;
      log.val_loss = va.loss;
      log.val_acc = va.accuracy;
    } catch (const DomainError& e) {
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (callbacks.val_loss_override) log.val_loss = callbacks.val_loss_override(epoch, log.val_loss);
    if (!std::isfinite(log.train_loss) || !std::isfinite(log.val_loss))
      throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": non-finite loss");
    if (cfg.record_time)
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.logs.push_back(log);

    if (stopper.observe(epoch, log.val_loss)) {
      result.best.params = params;
      result.best.epoch = static_cast<std::uint32_t>(epoch);
      result.best.val_loss = log.val_loss;
    }
    if (callbacks.on_epoch_end) callbacks.on_epoch_end(log, params);
    if (stopper.should_stop()) {
      result.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  return result;
}

}  // namespace gntm
