#include "gntm/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gntm/loss.hpp"
#include "gntm/reference.hpp"

namespace gntm {

void ModelConfig::validate() const {
  for (std::size_t v : {input_features, window, gru1_units, gru2_units, memory_rows, memory_width, controller_units,
                        dense_units}) {
    if (v < 1) throw std::invalid_argument("ModelConfig: all sizes must be >= 1");
  }
  if (classes != kNumClasses) throw std::invalid_argument("ModelConfig: classes must be 3");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig cfg;
  cfg.input_features = 4;
  cfg.window = 3;
  cfg.gru1_units = 5;
  cfg.gru2_units = 4;
  cfg.memory_rows = 4;
  cfg.memory_width = 3;
  cfg.controller_units = 4;
  cfg.dense_units = 6;
  return cfg;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  return ModelParams{GruParams::zeros(cfg.gru1_units, cfg.input_features),
                     GruParams::zeros(cfg.gru2_units, cfg.gru1_units), NtmParams::zeros(cfg.ntm()),
                     DenseParams::zeros(cfg.dense_units, cfg.ntm().output_dim()),
                     DenseParams::zeros(cfg.classes, cfg.dense_units)};
}

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ModelParams p;
  p.gru1 = GruParams::glorot(cfg.gru1_units, cfg.input_features, rng);
  p.gru2 = GruParams::glorot(cfg.gru2_units, cfg.gru1_units, rng);
  p.ntm = NtmParams::glorot(cfg.ntm(), rng);
  p.dense1 = DenseParams::glorot(cfg.dense_units, cfg.ntm().output_dim(), rng);
  p.out = DenseParams::glorot(cfg.classes, cfg.dense_units, rng);
  return p;
}

namespace {

template <typename Params, typename F>
void visit_all(Params& p, F&& f) {
  GruParams::visit(p.gru1, [&](const std::string& n, auto& t) { f("gru1." + n, t); });
  GruParams::visit(p.gru2, [&](const std::string& n, auto& t) { f("gru2." + n, t); });
  NtmParams::visit(p.ntm, [&](const std::string& n, auto& t) { f("ntm." + n, t); });
  DenseParams::visit(p.dense1, [&](const std::string& n, auto& t) { f("dense1." + n, t); });
  DenseParams::visit(p.out, [&](const std::string& n, auto& t) { f("out." + n, t); });
}

}  // namespace

void ModelParams::for_each(const std::function<void(const std::string&, Tensor&)>& f) { visit_all(*this, f); }

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&)>& f) const {
  visit_all(*this, f);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

void ModelParams::set_zero() {
  for_each([](const std::string&, Tensor& t) { t.fill(0.0); });
}

bool ModelParams::operator==(const ModelParams& o) const {
  std::vector<const Tensor*> mine, theirs;
  for_each([&](const std::string&, const Tensor& t) { mine.push_back(&t); });
  o.for_each([&](const std::string&, const Tensor& t) { theirs.push_back(&t); });
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i)
    if (!(*mine[i] == *theirs[i])) return false;
  return true;
}

Tensor forward(const ModelParams& p, const ModelConfig& cfg, const Tensor& window, ModelCache* cache) {
  if (window.rank() != 2 || window.dim(0) != cfg.window || window.dim(1) != cfg.input_features) {
    throw DimensionError("forward: window " + shape_str(window.shape()) + " does not match config [" +
                         std::to_string(cfg.window) + "x" + std::to_string(cfg.input_features) + "]");
  }
  const NtmConfig ntm_cfg = cfg.ntm();
  const Tensor seq1 = gru_sequence(p.gru1, window, true, cache ? &cache->gru1 : nullptr);
  const Tensor seq2 = gru_sequence(p.gru2, seq1, true, cache ? &cache->gru2 : nullptr);
  const Tensor memory_out = ntm_sequence(p.ntm, ntm_cfg, seq2, cache ? &cache->ntm : nullptr);
  const Tensor hidden = dense_forward(p.dense1, memory_out, Activation::relu, cache ? &cache->dense1 : nullptr);
  const Tensor logits = dense_forward(p.out, hidden, Activation::none, cache ? &cache->out : nullptr);
  Tensor probs = softmax(logits);
  if (cache) cache->probs = probs;
  return probs;
}

Tensor forward_batch(const ModelParams& p, const ModelConfig& cfg, const std::vector<Tensor>& windows) {
  Tensor out({windows.size(), cfg.classes});
  for (std::size_t b = 0; b < windows.size(); ++b) {
    const Tensor probs = forward(p, cfg, windows[b]);
    std::copy(probs.values().begin(), probs.values().end(), out.row(b).begin());
  }
  return out;
}

Tensor backward(const ModelParams& p, const ModelConfig& cfg, const ModelCache& cache, const Tensor& label,
                ModelParams& grads) {
  if (label.size() != cfg.classes) throw DimensionError("backward: label must have 3 entries");
  const Tensor d_logits = elementwise(Op::sub, cache.probs, label);
  const Tensor d_hidden = dense_backward(p.out, cache.out, d_logits, grads.out);
  const Tensor d_memory_out = dense_backward(p.dense1, cache.dense1, d_hidden, grads.dense1);
  const Tensor d_seq2 = ntm_sequence_backward(p.ntm, cfg.ntm(), cache.ntm, d_memory_out, grads.ntm);
  const Tensor d_seq1 = gru_sequence_backward(p.gru2, cache.gru2, d_seq2, grads.gru2);
  return gru_sequence_backward(p.gru1, cache.gru1, d_seq1, grads.gru1);
}

double example_gradient(const ModelParams& p, const ModelConfig& cfg, const Tensor& window, const Tensor& label,
                        ModelParams& grads) {
  ModelCache cache;
  const Tensor probs = forward(p, cfg, window, &cache);
  backward(p, cfg, cache, label, grads);
  return cross_entropy(probs, label);
}

std::size_t argmax(const Tensor& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Prediction predict(const ModelParams& p, const ModelConfig& cfg, const Tensor& window) {
  Tensor probs = forward(p, cfg, window);
  return Prediction{argmax(probs), std::move(probs)};
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckReport grad_check(const ModelConfig& cfg, const GradCheckOptions& opts) {
  Rng rng(opts.seed);
  ModelParams params = ModelParams::init(cfg, rng);
  // Non-zero biases so the bias paths carry signal.
  params.for_each([&](const std::string& name, Tensor& t) {
    if (name.find(".b_") != std::string::npos || name.ends_with(".b")) {
      for (auto& v : t.data()) v = rng.uniform(-0.1, 0.1);
    }
  });
  Tensor window({cfg.window, cfg.input_features});
  for (auto& v : window.data()) v = rng.uniform();
  Tensor label({cfg.classes});
  label[rng.below(cfg.classes)] = 1.0;

  ModelParams grads = ModelParams::zeros(cfg);
  example_gradient(params, cfg, window, label, grads);
  if (opts.corrupt) opts.corrupt(grads);

  struct Coord {
    std::size_t tensor, index;
  };
  std::vector<Tensor*> tensors;
  std::vector<const Tensor*> grad_tensors;
  std::vector<std::string> names;
  params.for_each([&](const std::string& n, Tensor& t) {
    names.push_back(n);
    tensors.push_back(&t);
  });
  grads.for_each([&](const std::string&, const Tensor& t) { grad_tensors.push_back(&t); });

  std::vector<Coord> all;
  for (std::size_t k = 0; k < tensors.size(); ++k)
    for (std::size_t i = 0; i < tensors[k]->size(); ++i) all.push_back({k, i});

  std::vector<Coord> picked;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const Coord c{k, rng.below(tensors[k]->size())};
    picked.push_back(c);
    seen.insert({c.tensor, c.index});
  }
  for (std::size_t idx : rng_permutation(rng, all.size())) {
    if (picked.size() >= opts.min_coordinates) break;
    if (seen.insert({all[idx].tensor, all[idx].index}).second) picked.push_back(all[idx]);
  }

  auto loss_at = [&]() { return reference_loss(params, cfg, window, label); };

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  const Tensor probs = forward(params, cfg, window);
  const auto ref = reference_probs(params, cfg, window);
  for (std::size_t k = 0; k < probs.size(); ++k)
    report.reference_max_diff =
        std::max(report.reference_max_diff, static_cast<double>(std::abs(probs[k] - ref[k])));
  report.tensors_covered = tensors.size();
  for (const Coord& c : picked) {
    double& theta = (*tensors[c.tensor])[c.index];
    const double saved = theta;
    const double hi = saved + opts.epsilon;
    const double lo = saved - opts.epsilon;
    theta = hi;
    const long double up = loss_at();
    theta = lo;
    const long double down = loss_at();
    theta = saved;
    // Divide by the step actually taken after rounding hi and lo.
    const double numeric = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
    GradCheckEntry e{names[c.tensor], c.index, (*grad_tensors[c.tensor])[c.index], numeric, 0.0};
    e.rel_error = relative_error(e.analytic, e.numeric);
    if (report.entries.empty() || e.rel_error > report.max_rel_error) {
      report.max_rel_error = e.rel_error;
      report.worst = e;
    }
    report.entries.push_back(std::move(e));
  }
  report.coordinates = report.entries.size();
  report.passed = report.max_rel_error < opts.tolerance;
  return report;
}

}  // namespace gntm
