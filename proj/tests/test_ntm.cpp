#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fd_oracle.hpp"
#include "gntm/ntm.hpp"
#include "gntm/training.hpp"

using namespace gntm;
using gntm::testing::max_fd_error;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

NtmParams random_ntm(const NtmConfig& cfg, Rng& rng) {
  NtmParams p = NtmParams::glorot(cfg, rng);
  NtmParams::visit(p, [&](const std::string& name, Tensor& t) {
    if (name.find("b_") != std::string::npos)
      for (auto& v : t.data()) v = rng.uniform(-0.3, 0.3);
  });
  return p;
}

NtmConfig small_config(bool additive) {
  NtmConfig cfg;
  cfg.input_dim = 3;
  cfg.memory_rows = 4;
  cfg.memory_width = 5;
  cfg.controller_units = 4;
  cfg.additive_write = additive;
  return cfg;
}

double cosine(const Tensor& a, const Tensor& b) { return dot(a.data(), b.data()) / (norm(a.data()) * norm(b.data())); }

double sum(const Tensor& t) { return std::accumulate(t.values().begin(), t.values().end(), 0.0); }

}  // namespace

TEST_CASE("address on identical rows is uniform") {
  const Tensor m = Tensor::filled({4, 3}, 0.25);
  const Tensor w = address(m, Tensor::vector({1.0, -2.0, 0.5}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("address direct evaluation") {
  const Tensor m = Tensor::matrix({{1.0, 0.0}, {0.0, 1.0}});
  const Tensor w = address(m, Tensor::vector({1.0, 0.0}));
  CHECK(std::abs(w[0] - 0.7310585786300049) < 1e-15);
  CHECK(std::abs(w[1] - 0.2689414213699951) < 1e-15);

  const Tensor r = read(m, w);
  CHECK(std::abs(r[0] - 0.7310585786300049) < 1e-15);
  CHECK(std::abs(r[1] - 0.2689414213699951) < 1e-15);
}

TEST_CASE("address clamps zero-norm keys and rows") {
  const Tensor zeros({3, 2});
  const Tensor w = address(zeros, Tensor::vector({0.0, 0.0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(1.0 / 3.0));
  CHECK(cosine_similarity(Tensor::matrix({{1e-9, 0.0}}), Tensor::vector({1e-9, 0.0}))[0] ==
        doctest::Approx(1e-18 / 1e-8));
}

TEST_CASE("address returns probability vectors on random inputs") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor w = address(random_tensor(rng, {6, 4}), random_tensor(rng, {4}));
    CHECK(std::abs(sum(w) - 1.0) < 1e-12);
    for (double v : w.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("read selects and averages rows") {
  const Tensor m = Tensor::matrix({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
  CHECK(read(m, Tensor::vector({0.0, 1.0, 0.0})) == Tensor::vector({3.0, 4.0}));
  const Tensor same = Tensor::matrix({{0.5, -1.0}, {0.5, -1.0}});
  const Tensor r = read(same, Tensor::vector({0.5, 0.5}));
  CHECK(r == Tensor::vector({0.5, -1.0}));
  CHECK_THROWS_AS(read(m, Tensor::vector({1.0, 0.0})), DimensionError);
}

TEST_CASE("write follows erase-then-add") {
  SUBCASE("additive form") {
    const Tensor out =
        write(Tensor({1, 2}), Tensor::vector({1.0}), Tensor::vector({1.0, 2.0}), Tensor::vector({0.0, 0.0}));
    CHECK(out == Tensor::matrix({{1.0, 2.0}}));
  }
  SUBCASE("full erase of one row") {
    const Tensor m = Tensor::matrix({{1.0, 2.0}, {3.0, 4.0}});
    const Tensor out = write(m, Tensor::vector({0.0, 1.0}), Tensor({2}), Tensor::vector({1.0, 1.0}));
    CHECK(out == Tensor::matrix({{1.0, 2.0}, {0.0, 0.0}}));
  }
  SUBCASE("zero weighting is a no-op") {
    Rng rng(3);
    const Tensor m = random_tensor(rng, {3, 4});
    CHECK(write(m, Tensor({3}), random_tensor(rng, {4}), random_tensor(rng, {4}, 0.0, 1.0)) == m);
  }
  SUBCASE("without erase the change is the outer product") {
    Rng rng(8);
    const Tensor m = random_tensor(rng, {4, 5});
    const Tensor w = address(m, random_tensor(rng, {5}));
    const Tensor v = random_tensor(rng, {5});
    const Tensor out = write(m, w, v, Tensor({5}));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(out(i, j) == m(i, j) + w[i] * v[j]);
  }
}

TEST_CASE("write then read with the same key retrieves the written vector") {
  Rng rng(2024);
  const Tensor m0 = random_tensor(rng, {4, 5}, -0.1, 0.1);
  const Tensor key = random_tensor(rng, {5});
  const Tensor v = random_tensor(rng, {5});
  const Tensor m1 = write(m0, address(m0, key), v, Tensor({5}));
  const Tensor r = read(m1, address(m1, key));
  CHECK(cosine(r, v) > 0.9);
}

TEST_CASE("ntm_step on zero memory and zero weights is the zero fixed point") {
  const NtmConfig cfg = small_config(false);
  NtmState state = ntm_initial_state(cfg);
  state.memory.fill(0.0);
  const NtmStepResult out = ntm_step(NtmParams::zeros(cfg), cfg, state, Tensor::vector({0.3, -0.2, 0.9}));
  CHECK(out.output == Tensor({cfg.output_dim()}));
  for (std::size_t i = 0; i < cfg.memory_rows; ++i) CHECK(out.state.w_read[i] == doctest::Approx(0.25));
}

TEST_CASE("ntm_initial_state layout") {
  const NtmConfig cfg = small_config(false);
  const NtmState s = ntm_initial_state(cfg);
  CHECK(s.memory.shape() == Shape{4, 5});
  for (double v : s.memory.values()) CHECK(v == 1e-6);
  CHECK(s.read == Tensor({5}));
  CHECK(s.controller.h == Tensor({4}));
  CHECK(sum(s.w_read) == doctest::Approx(1.0));
}

TEST_CASE("ntm_step gradients match finite differences") {
  for (bool additive : {false, true}) {
    CAPTURE(additive);
    const NtmConfig cfg = small_config(additive);
    Rng rng(additive ? 77 : 76);
    NtmParams p = random_ntm(cfg, rng);
    NtmState state = ntm_initial_state(cfg);
    state.memory = random_tensor(rng, {4, 5});
    state.read = random_tensor(rng, {5});
    state.controller.h = random_tensor(rng, {4});
    Tensor x = random_tensor(rng, {3});

    const Tensor c_out = random_tensor(rng, {cfg.output_dim()});
    const Tensor c_mem = random_tensor(rng, {4, 5});
    const Tensor c_read = random_tensor(rng, {5});
    const Tensor c_h = random_tensor(rng, {4});
    auto loss = [&] {
      const NtmStepResult r = ntm_step(p, cfg, state, x);
      return dot(r.output.data(), c_out.data()) + dot(r.state.memory.data(), c_mem.data()) +
             dot(r.state.read.data(), c_read.data()) + dot(r.state.controller.h.data(), c_h.data());
    };

    NtmStepCache cache;
    ntm_step(p, cfg, state, x, &cache);
    NtmParams grads = NtmParams::zeros(cfg);
    Tensor d_x;
    const NtmStateGrads d_in =
        ntm_step_backward(p, cfg, cache, c_out, NtmStateGrads{c_mem, c_read, c_h}, grads, d_x);

    std::vector<Tensor*> params;
    std::vector<const Tensor*> analytic;
    NtmParams::visit(p, [&](const std::string&, Tensor& t) { params.push_back(&t); });
    NtmParams::visit(grads, [&](const std::string&, const Tensor& t) { analytic.push_back(&t); });
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (additive && (params[k] == &p.w_e || params[k] == &p.b_e)) continue;
      CHECK(max_fd_error(params[k]->data(), analytic[k]->values(), loss) < 1e-4);
    }
    CHECK(max_fd_error(x.data(), d_x.values(), loss) < 1e-4);
    CHECK(max_fd_error(state.memory.data(), d_in.memory.values(), loss) < 1e-4);
    CHECK(max_fd_error(state.read.data(), d_in.read.values(), loss) < 1e-4);
    CHECK(max_fd_error(state.controller.h.data(), d_in.controller.values(), loss) < 1e-4);
    if (additive) {
      for (double g : grads.w_e.values()) CHECK(g == 0.0);
    }
  }
}

TEST_CASE("ntm_sequence BPTT through memory matches finite differences") {
  for (bool additive : {false, true}) {
    CAPTURE(additive);
    const NtmConfig cfg = small_config(additive);
    Rng rng(additive ? 5 : 6);
    NtmParams p = random_ntm(cfg, rng);
    Tensor xs = random_tensor(rng, {3, 3});
    const Tensor c = random_tensor(rng, {cfg.output_dim()});
    auto loss = [&] { return dot(ntm_sequence(p, cfg, xs).data(), c.data()); };

    std::vector<NtmStepCache> caches;
    ntm_sequence(p, cfg, xs, &caches);
    NtmParams grads = NtmParams::zeros(cfg);
    const Tensor d_xs = ntm_sequence_backward(p, cfg, caches, c, grads);

    std::vector<Tensor*> params;
    std::vector<const Tensor*> analytic;
    NtmParams::visit(p, [&](const std::string&, Tensor& t) { params.push_back(&t); });
    NtmParams::visit(grads, [&](const std::string&, const Tensor& t) { analytic.push_back(&t); });
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (additive && (params[k] == &p.w_e || params[k] == &p.b_e)) continue;
      CHECK(max_fd_error(params[k]->data(), analytic[k]->values(), loss) < 1e-4);
    }
    CHECK(max_fd_error(xs.data(), d_xs.values(), loss) < 1e-4);
  }
}

TEST_CASE("ntm_sequence with one step equals ntm_step on the initial state") {
  const NtmConfig cfg = small_config(false);
  Rng rng(9);
  const NtmParams p = random_ntm(cfg, rng);
  const Tensor xs = random_tensor(rng, {1, 3});
  const NtmStepResult step = ntm_step(p, cfg, ntm_initial_state(cfg), xs.row_vector(0));
  CHECK(ntm_sequence(p, cfg, xs) == step.output);
  CHECK(ntm_sequence(p, cfg, xs) == ntm_sequence(p, cfg, xs));
  CHECK_THROWS(ntm_sequence(p, cfg, Tensor({0, 3})));
}

TEST_CASE("weightings stay probability vectors and memory stays bounded") {
  for (bool additive : {false, true}) {
    const NtmConfig cfg = small_config(additive);
    Rng rng(31);
    const NtmParams p = random_ntm(cfg, rng);
    NtmState state = ntm_initial_state(cfg);
    double bound = 1e-6;
    for (int t = 0; t < 60; ++t) {
      NtmStepCache cache;
      state = ntm_step(p, cfg, state, random_tensor(rng, {3}, -3.0, 3.0), &cache).state;
      double max_add = 0.0;
      for (double v : cache.add.values()) max_add = std::max(max_add, std::abs(v));
      bound += max_add;
      for (const Tensor* w : {&state.w_read, &state.w_write}) {
        CHECK(std::abs(sum(*w) - 1.0) < 1e-9);
        for (double v : w->values()) CHECK(v >= 0.0);
      }
      double max_m = 0.0;
      for (double v : state.memory.values()) max_m = std::max(max_m, std::abs(v));
      CHECK(max_m <= bound + 1e-12);
      CHECK(state.memory.all_finite());
    }
  }
}

TEST_CASE("copy task: recall a stored symbol after a delay") {
  // Step 0 shows a one-hot symbol, step 1 asks for it back.
  NtmConfig cfg;
  cfg.input_dim = 4;
  cfg.memory_rows = 4;
  cfg.memory_width = 5;
  cfg.controller_units = 8;
  Rng rng(12);
  NtmParams ntm = NtmParams::glorot(cfg, rng);
  DenseParams head = DenseParams::glorot(3, cfg.output_dim(), rng);

  std::vector<Tensor*> params;
  NtmParams::visit(ntm, [&](const std::string&, Tensor& t) { params.push_back(&t); });
  DenseParams::visit(head, [&](const std::string&, Tensor& t) { params.push_back(&t); });
  AdamState adam;
  TrainConfig tc;
  tc.lr = 0.01;

  auto sequence = [](std::size_t symbol) {
    Tensor xs({2, 4});
    xs(0, symbol) = 1.0;
    xs(1, 3) = 1.0;
    return xs;
  };

  for (int step = 0; step < 200; ++step) {
    const std::size_t symbol = rng.below(3);
    std::vector<NtmStepCache> caches;
    const Tensor out = ntm_sequence(ntm, cfg, sequence(symbol), &caches);
    DenseCache dc;
    const Tensor probs = softmax(dense_forward(head, out, Activation::none, &dc));
    Tensor d_logits = probs;
    d_logits[symbol] -= 1.0;
    NtmParams g_ntm = NtmParams::zeros(cfg);
    DenseParams g_head = DenseParams::zeros(3, cfg.output_dim());
    ntm_sequence_backward(ntm, cfg, caches, dense_backward(head, dc, d_logits, g_head), g_ntm);
    std::vector<const Tensor*> grads;
    NtmParams::visit(g_ntm, [&](const std::string&, const Tensor& t) { grads.push_back(&t); });
    DenseParams::visit(g_head, [&](const std::string&, const Tensor& t) { grads.push_back(&t); });
    adam_step(adam, params, grads, tc);
  }

  std::size_t correct = 0;
  for (std::size_t symbol = 0; symbol < 3; ++symbol) {
    const Tensor probs = softmax(dense_forward(head, ntm_sequence(ntm, cfg, sequence(symbol)), Activation::none));
    const auto best = std::max_element(probs.values().begin(), probs.values().end()) - probs.values().begin();
    correct += static_cast<std::size_t>(best) == symbol;
  }
  CHECK(static_cast<double>(correct) / 3.0 > 0.8);
}
