#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gntm/checkpoint.hpp"
#include "gntm/loss.hpp"
#include "gntm/training.hpp"

using namespace gntm;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gntm_test_training";
  fs::create_directories(dir);
  return dir / name;
}

// Class c lights up feature c; the rest is noise.
std::vector<LabeledWindow> toy_windows(const ModelConfig& cfg, std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledWindow> out;
  for (std::size_t i = 0; i < per_class; ++i)
    for (int c = 0; c < 3; ++c) {
      Tensor w({cfg.window, cfg.input_features});
      for (auto& v : w.data()) v = 0.3 * rng.uniform();
      for (std::size_t t = 0; t < cfg.window; ++t) w(t, static_cast<std::size_t>(c)) += 0.7;
      out.push_back({w, one_hot(c)});
    }
  return out;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("cross_entropy examples") {
  CHECK(cross_entropy(Tensor::vector({0.25, 0.5, 0.25}), one_hot(1)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(cross_entropy(one_hot(2), one_hot(2)) == 0.0);
  for (int c = 0; c < 3; ++c)
    CHECK(cross_entropy(Tensor::vector({1.0 / 3, 1.0 / 3, 1.0 / 3}), one_hot(c)) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-15));
  // Zero probability is floored, not infinite.
  CHECK(cross_entropy(Tensor::vector({1.0, 0.0, 0.0}), one_hot(1)) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("cross_entropy is non-negative") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    Tensor p = Tensor::vector({rng.uniform(), rng.uniform(), rng.uniform()});
    const double s = p[0] + p[1] + p[2];
    for (auto& v : p.data()) v /= s;
    CHECK(cross_entropy(p, one_hot(static_cast<int>(rng.below(3)))) >= 0.0);
  }
}

TEST_CASE("adam first step moves by about lr against the gradient sign") {
  Tensor theta = Tensor::vector({0.5, 0.5});
  const Tensor g = Tensor::vector({0.1, -0.1});
  AdamState state;
  adam_step(state, {&theta}, {&g}, TrainConfig{});
  CHECK(state.t == 1);
  CHECK(theta[0] - 0.5 == doctest::Approx(-0.00099999990000000996).epsilon(1e-12));
  CHECK(theta[1] - 0.5 == doctest::Approx(0.00099999990000000996).epsilon(1e-12));
}

TEST_CASE("adam five-step scalar trajectory matches the recurrence oracle") {
  const double grads[] = {0.1, -0.2, 0.3, 0.05, -0.1};
  const double expected[] = {0.49900000010000001, 0.49936610360388489, 0.49902286253947742, 0.49866715470968059,
                             0.49851639053651675};
  Tensor theta = Tensor::vector({0.5});
  AdamState state;
  for (int k = 0; k < 5; ++k) {
    const Tensor g = Tensor::vector({grads[k]});
    adam_step(state, {&theta}, {&g}, TrainConfig{});
    CHECK(std::abs(theta[0] - expected[k]) < 1e-12);
    CHECK(state.v[0][0] >= 0.0);
  }
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  Tensor theta = Tensor::vector({0.25, -3.0});
  const Tensor g({2});
  AdamState state;
  for (int k = 0; k < 10; ++k) adam_step(state, {&theta}, {&g}, TrainConfig{});
  CHECK(theta == Tensor::vector({0.25, -3.0}));
}

TEST_CASE("adam descends a quadratic bowl monotonically") {
  Tensor theta = Tensor::vector({2.0, -1.5, 0.7});
  TrainConfig cfg;
  cfg.lr = 0.01;
  AdamState state;
  double previous = 1e300;
  for (int k = 0; k < 100; ++k) {
    double f = 0.0;
    Tensor g({3});
    for (std::size_t i = 0; i < 3; ++i) {
      f += theta[i] * theta[i];
      g[i] = 2.0 * theta[i];
    }
    CHECK(f < previous);
    previous = f;
    adam_step(state, {&theta}, {&g}, cfg);
  }
}

TEST_CASE("adam rejects mismatched lists") {
  Tensor a({2}), b({3});
  AdamState state;
  CHECK_THROWS_AS(adam_step(state, {&a}, {}, TrainConfig{}), DimensionError);
  const Tensor gb = b;
  CHECK_THROWS_AS(adam_step(state, {&a}, {&gb}, TrainConfig{}), DimensionError);
}

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.beta1 = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.patience = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("early stopping on injected losses") {
  EarlyStopping stop(4, 1e-6);
  const double losses[] = {1.0, 0.9, 0.91, 0.92, 0.93, 0.94};
  std::size_t epoch = 0;
  for (double l : losses) {
    stop.observe(++epoch, l);
    if (stop.should_stop()) break;
  }
  CHECK(epoch == 6);
  CHECK(stop.best_epoch() == 2);
  CHECK(stop.best_loss() == 0.9);

  EarlyStopping tiny(1, 1e-6);
  tiny.observe(1, 1.0);
  CHECK_FALSE(tiny.observe(2, 1.0 - 1e-7));
  CHECK(tiny.should_stop());
}

TEST_CASE("train stops early and restores the best epoch") {
  const ModelConfig cfg = ModelConfig::tiny();
  const auto train_set = toy_windows(cfg, 4, 1);
  const auto val_set = toy_windows(cfg, 2, 2);
  TrainConfig tc;
  tc.max_epochs = 20;
  const double injected[] = {1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.5};
  std::vector<ModelParams> snapshots;
  TrainCallbacks cb;
  cb.val_loss_override = [&](std::size_t epoch, double) { return injected[epoch - 1]; };
  cb.on_epoch_end = [&](const EpochLog&, const ModelParams& p) { snapshots.push_back(p); };
  const TrainResult r = train(cfg, train_set, val_set, tc, cb);
  CHECK(r.logs.size() == 6);
  CHECK(r.stopped_early);
  CHECK(r.best.epoch == 2);
  CHECK(r.best.val_loss == 0.9);
  REQUIRE(snapshots.size() == 6);
  CHECK(r.best.params == snapshots[1]);
  CHECK_FALSE(r.best.params == snapshots[5]);
  for (const auto& log : r.logs) CHECK(r.best.val_loss <= log.val_loss);
}

TEST_CASE("train runs exactly max_epochs when patience never triggers") {
  const ModelConfig cfg = ModelConfig::tiny();
  TrainConfig tc;
  tc.max_epochs = 3;
  TrainCallbacks cb;
  cb.val_loss_override = [](std::size_t epoch, double) { return 1.0 / static_cast<double>(epoch); };
  const TrainResult r = train(cfg, toy_windows(cfg, 3, 1), toy_windows(cfg, 1, 2), tc, cb);
  CHECK(r.logs.size() == 3);
  CHECK_FALSE(r.stopped_early);
  CHECK(r.best.epoch == 3);
}

TEST_CASE("train learns a separable toy problem deterministically") {
  const ModelConfig cfg = ModelConfig::tiny();
  const auto train_set = toy_windows(cfg, 30, 1);
  const auto val_set = toy_windows(cfg, 10, 2);
  TrainConfig tc;
  tc.lr = 0.01;
  tc.max_epochs = 15;
  tc.record_time = false;
  const TrainResult a = train(cfg, train_set, val_set, tc);
  const TrainResult b = train(cfg, train_set, val_set, tc);
  CHECK(a.logs.back().train_loss < a.logs.front().train_loss);
  CHECK(evaluate_split(a.best.params, cfg, val_set).accuracy > 0.9);
  std::ostringstream la, lb;
  write_epoch_log(la, a.logs);
  write_epoch_log(lb, b.logs);
  CHECK(la.str() == lb.str());
  CHECK(a.best.params == b.best.params);
  for (const auto& log : a.logs) {
    CHECK(log.train_loss >= 0.0);
    CHECK(log.val_loss >= 0.0);
    CHECK(log.seconds == 0.0);
  }
  for (const auto& log : a.logs) CHECK(a.best.val_loss <= log.val_loss);
}

TEST_CASE("train rejects empty splits") {
  const ModelConfig cfg = ModelConfig::tiny();
  CHECK_THROWS(train(cfg, {}, toy_windows(cfg, 1, 1), TrainConfig{}));
  CHECK_THROWS(train(cfg, toy_windows(cfg, 1, 1), {}, TrainConfig{}));
}

TEST_CASE("train reports divergence") {
  const ModelConfig cfg = ModelConfig::tiny();
  auto bad = toy_windows(cfg, 2, 1);
  bad[0].window[0] = std::nan("");
  CHECK_THROWS_AS(train(cfg, bad, toy_windows(cfg, 1, 2), TrainConfig{}), DivergenceError);
}

TEST_CASE("epoch log writes and reads back") {
  const std::vector<EpochLog> logs = {{1, 0.5, 0.75, 0.625, 0.8, 1.25}, {2, 0.125, 1.0, 0.0625, 1.0, 0.0}};
  std::ostringstream out;
  write_epoch_log(out, logs);
  CHECK(out.str() ==
        "epoch,train_loss,train_acc,val_loss,val_acc,seconds\n"
        "1,0.500000000,0.750000,0.625000000,0.800000,1.250\n"
        "2,0.125000000,1.000000,0.062500000,1.000000,0.000\n");
  const auto path = temp_path("epochs.csv");
  write_epoch_log(path.string(), logs);
  const auto back = read_epoch_log(path.string());
  REQUIRE(back.size() == 2);
  CHECK(back[1].val_loss == 0.0625);
  CHECK(back[0].seconds == 1.25);
}

TEST_CASE("checkpoint round-trip reproduces forward outputs bit-exactly") {
  ModelConfig cfg = ModelConfig::tiny();
  cfg.additive_write = true;
  Rng rng(21);
  Checkpoint ckpt{cfg, ModelParams::init(cfg, rng), {}, 5, 0.125, 99};
  ckpt.norm.min = {0, 1, 2, 3};
  ckpt.norm.max = {1, 2, 3, 4};
  ckpt.norm.feature_names = {"a", "b", "c", "d"};
  const auto path = temp_path("model.gntm");
  save_checkpoint(ckpt, path.string());
  const Checkpoint back = load_checkpoint(path.string(), cfg);
  CHECK(back.config == cfg);
  CHECK(back.params == ckpt.params);
  CHECK(back.norm == ckpt.norm);
  CHECK(back.epoch == 5);
  CHECK(back.val_loss == 0.125);
  CHECK(back.seed == 99);
  const auto windows = toy_windows(cfg, 2, 3);
  for (const auto& w : windows) CHECK(forward(back.params, cfg, w.window) == forward(ckpt.params, cfg, w.window));

  const auto bytes = read_bytes(path);
  SUBCASE("truncated") {
    for (std::size_t keep : {std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
      write_bytes(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<long>(keep)));
      CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    }
  }
  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[1] = 'Z';
    write_bytes(path, bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string()), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("flipped payload byte") {
    auto bad = bytes;
    bad[bytes.size() / 2] ^= 0x01;
    write_bytes(path, bad);
    CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
  }
  SUBCASE("mismatched config names the tensor") {
    ModelConfig other = cfg;
    other.gru1_units = 6;
    CHECK_THROWS_WITH_AS(load_checkpoint(path.string(), other), doctest::Contains("gru1.w_z"), DimensionError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS(load_checkpoint((path.string() + ".missing")));
  }
}
