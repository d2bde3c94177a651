#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "scene_informer/checkpoint.hpp"
#include "scene_informer/nn.hpp"
#include "scene_informer/optim.hpp"
#include "support/errors.hpp"
#include "support/gradcheck_suite.hpp"

using namespace scene_informer;
using namespace scene_informer::nn;
using scene_informer::testing::check_error;
using scene_informer::testing::TensorD;
using TensorF = Tensor<float>;

TEST_CASE("softmax of equal logits is uniform") {
  for (std::size_t k : {1u, 3u, 7u}) {
    const TensorF p = softmax(TensorF::full({2, k}, 0.37f), 1);
    for (const float v : p.data()) CHECK(v == doctest::Approx(1.0 / k).epsilon(1e-6));
  }
}

TEST_CASE("softmax rows sum to one and stay finite") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> v(24);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-60.0, 60.0));
    const TensorF p = softmax(TensorF::from({4, 6}, v), 1);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 6; ++c) {
        CHECK(std::isfinite(p.at(r, c)));
        total += p.at(r, c);
      }
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("max_pool over the last axis") {
  const TensorF y = max_pool(TensorF::from({2, 2}, {1, 5, 3, 2}), 1);
  CHECK(y.shape() == Shape{2});
  CHECK(y.at(0) == 5.0f);
  CHECK(y.at(1) == 3.0f);
}

TEST_CASE("layer_norm rows have zero mean and unit variance") {
  Rng rng(8);
  std::vector<float> v(5 * 16);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-4.0, 9.0));
  const TensorF y = layer_norm(TensorF::from({5, 16}, v), TensorF::full({16}, 1.0f), TensorF::full({16}, 0.0f));
  for (std::size_t r = 0; r < 5; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < 16; ++c) mean += y.at(r, c) / 16.0;
    for (std::size_t c = 0; c < 16; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean) / 16.0;
    CHECK(std::abs(mean) <= 1e-5);
    CHECK(std::abs(var - 1.0) <= 1e-4);
  }
}

TEST_CASE("attention over a single kv token returns its value projection") {
  Rng rng(1);
  ParameterStore<float> store;
  MultiHeadAttention<float> attn(store, "a", 8, 2, rng);
  std::vector<float> qv(3 * 8), kv(8);
  for (auto& x : qv) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto& x : kv) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  const TensorF q = TensorF::from({3, 8}, qv);
  const TensorF k = TensorF::from({1, 8}, kv);
  const TensorF expected = attn.out(attn.value(k));
  const TensorF got = attn(q, k);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(got.at(r, c) == doctest::Approx(expected.at(0, c)).epsilon(1e-5));
  }

  // Same token among masked distractors.
  std::vector<float> many(4 * 8);
  for (auto& x : many) x = static_cast<float>(rng.uniform(-3.0, 3.0));
  std::copy(kv.begin(), kv.end(), many.begin() + 16);
  const AttentionOutput<float> masked = attn.attend(q, TensorF::from({4, 8}, many), {1, 1, 0, 1});
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 8; ++c) CHECK(masked.output.at(r, c) == doctest::Approx(expected.at(0, c)).epsilon(1e-5));
  }
  for (const auto& w : masked.weights) {
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(w.at(r, 0) == 0.0f);
      CHECK(w.at(r, 2) == doctest::Approx(1.0f));
    }
  }
}

TEST_CASE("attention weights sum to one per query") {
  Rng rng(4);
  ParameterStore<float> store;
  MultiHeadAttention<float> attn(store, "a", 12, 3, rng);
  std::vector<float> v(7 * 12);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
  const TensorF x = TensorF::from({7, 12}, v);
  const auto out = attn.attend(x, x, {0, 1, 0, 0, 1, 0, 0});
  REQUIRE(out.weights.size() == 3);
  for (const auto& w : out.weights) {
    for (std::size_t r = 0; r < 7; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 7; ++c) total += w.at(r, c);
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("attention width must divide by heads") {
  Rng rng(0);
  ParameterStore<float> store;
  check_error(ErrorCode::kInvalidArgument, [&] { MultiHeadAttention<float>(store, "a", 10, 3, rng); });
}

TEST_CASE("backward of sum(x W) gives x broadcast over columns") {
  const TensorF x = TensorF::from({1, 3}, {2.0f, -1.0f, 0.5f});
  TensorF w = TensorF::parameter({3, 2}, {1, 2, 3, 4, 5, 6});
  sum(matmul(x, w)).backward();
  const std::vector<float> expected{2, 2, -1, -1, 0.5f, 0.5f};
  for (std::size_t i = 0; i < 6; ++i) CHECK(w.grad()[i] == expected[i]);
}

TEST_CASE("gradients accumulate until zero_grad; a consumed graph refuses a second backward") {
  TensorF w = TensorF::parameter({2}, {1.0f, 3.0f});
  const auto loss = [&] { return sum(mul(w, w)); };
  loss().backward();
  loss().backward();
  CHECK(w.grad()[0] == 4.0f);
  CHECK(w.grad()[1] == 12.0f);
  w.zero_grad();
  const TensorF l = loss();
  l.backward();
  CHECK(w.grad()[1] == 6.0f);
  check_error(ErrorCode::kGraphConsumed, [&] { l.backward(); });
  check_error(ErrorCode::kShapeMismatch, [&] { mul(w, w).backward(); }, "backward");
}

TEST_CASE("shape errors name the op and the shapes") {
  const TensorF a = TensorF::zeros({2, 3});
  const TensorF b = TensorF::zeros({2, 3});
  check_error(ErrorCode::kShapeMismatch, [&] { matmul(a, b); }, "matmul");
  check_error(ErrorCode::kShapeMismatch, [&] { matmul(a, b); }, "[2, 3]");
  check_error(ErrorCode::kShapeMismatch, [&] { add(a, TensorF::zeros({3, 2})); }, "add");
  check_error(ErrorCode::kShapeMismatch, [&] { concat<float>({a, TensorF::zeros({2, 2})}, 0); }, "concat");
  check_error(ErrorCode::kShapeMismatch, [&] { masked_fill(a, Mask(5), 0.0f); }, "masked_fill");
  check_error(ErrorCode::kShapeMismatch, [&] { slice(a, 1, 2, 2); }, "slice");
}

TEST_CASE("no-grad mode records no graph") {
  TensorF w = TensorF::parameter({2}, {1.0f, 2.0f});
  NoGradGuard guard;
  CHECK_FALSE(sum(mul(w, w)).requires_grad());
}

TEST_CASE("branch trace records piecewise decisions") {
  BranchTrace trace;
  relu(TensorF::from({3}, {-1.0f, 2.0f, 0.0f}));
  clamp(TensorF::from({3}, {-5.0f, 0.0f, 5.0f}), -1.0f, 1.0f);
  max_pool(TensorF::from({1, 3}, {1.0f, 9.0f, 2.0f}), 1);
  CHECK(trace.branches() == std::vector<std::uint32_t>{0, 1, 0, 0, 1, 2, 1});
  {
    BranchTrace inner;
    relu(TensorF::from({1}, {1.0f}));
    CHECK(inner.branches().size() == 1);
  }
  CHECK(trace.branches().size() == 7);
}

TEST_CASE("finite-difference agreement for every op and layer") {
  auto cases = testing::op_cases();
  const auto layers = testing::layer_cases();
  cases.insert(cases.end(), layers.begin(), layers.end());
  for (const auto& c : cases) {
    for (std::uint64_t seed = 100; seed < 103; ++seed) {
      const auto r = c.run(seed);
      CHECK_MESSAGE(r.relative_error < 1e-4, c.name << " seed " << seed << " error " << r.relative_error);
      CHECK(r.checked > 0);
      CHECK(r.skipped * 10 <= r.checked);
    }
  }
}

TEST_CASE("warmup schedule") {
  const AdamWConfig full{.base_lr = 1e-4, .warmup_steps = 10000};
  CHECK(warmup_learning_rate(full, 0) == 0.0);
  CHECK(warmup_learning_rate(full, 10000) == doctest::Approx(1e-4));
  CHECK(warmup_learning_rate(full, 5000) == doctest::Approx(5e-5));
  CHECK(warmup_learning_rate(full, 50000) == doctest::Approx(1e-4));
  CHECK(warmup_learning_rate({.base_lr = 3e-4, .warmup_steps = 0}, 0) == doctest::Approx(3e-4));
}

TEST_CASE("AdamW matches a hand-rolled update") {
  const AdamWConfig cfg{.base_lr = 0.1, .warmup_steps = 2, .weight_decay = 0.05};
  TensorD w = TensorD::parameter({2}, {0.5, -1.5});
  AdamW<double> opt(cfg, {w});
  double p[2] = {0.5, -1.5}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int step = 1; step <= 4; ++step) {
    opt.zero_grad();
    sum(mul(mul(w, w), w)).backward();
    const double lr = 0.1 * std::min(1.0, step / 2.0);
    for (int i = 0; i < 2; ++i) {
      const double g = 3 * p[i] * p[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, step));
      const double vh = v[i] / (1 - std::pow(0.999, step));
      p[i] = p[i] * (1 - lr * 0.05) - lr * mh / (std::sqrt(vh) + 1e-8);
    }
    opt.step();
    CHECK(opt.step_count() == step);
    for (std::size_t i = 0; i < 2; ++i) CHECK(w.data()[i] == doctest::Approx(p[i]).epsilon(1e-12));
  }
}

TEST_CASE("AdamW gradient clipping rescales to the global norm") {
  TensorD a = TensorD::parameter({1}, {0.0}), b = TensorD::parameter({1}, {0.0});
  AdamW<double> clipped({.base_lr = 1.0, .warmup_steps = 0, .weight_decay = 0.0, .max_grad_norm = 1.0}, {a, b});
  a.mutable_grad()[0] = 3.0;
  b.mutable_grad()[0] = 4.0;
  CHECK(clipped.gradient_norm() == doctest::Approx(5.0));
  clipped.step();
  // Adam's first step moves each coordinate by ~lr * sign(g) regardless of scale.
  CHECK(a.data()[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(clipped.first_moments()[0][0] == doctest::Approx(0.1 * 0.6));
  CHECK(clipped.first_moments()[1][0] == doctest::Approx(0.1 * 0.8));
}

TEST_CASE("identical seeds give bitwise-identical parameters") {
  const auto train = [] {
    Rng rng(42);
    ParameterStore<float> store;
    EncoderLayer<float> layer(store, "e", 8, 16, 2, rng);
    std::vector<TensorF> params;
    for (const auto& [n, t] : store.named()) params.push_back(t);
    AdamW<float> opt({.base_lr = 1e-2, .warmup_steps = 3}, params);
    std::vector<float> xv(5 * 8);
    for (auto& x : xv) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    const TensorF x = TensorF::from({5, 8}, xv);
    for (int step = 0; step < 10; ++step) {
      opt.zero_grad();
      sum(mul(layer(x), layer(x))).backward();
      opt.step();
    }
    std::vector<float> out;
    for (const auto& p : params) out.insert(out.end(), p.data().begin(), p.data().end());
    return out;
  };
  const auto a = train();
  const auto b = train();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::bit_cast<std::uint32_t>(a[i]) == std::bit_cast<std::uint32_t>(b[i]));
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Checkpoint c;
  c.config = {{"model", {{"d_model", 64}}}, {"tool_version", "x"}};
  c.parameters = {{"w", {2, 2}, {1.0f, -0.0f, std::numeric_limits<float>::denorm_min(), 3.14159274f}},
                  {"b", {3}, {std::nextafter(1.0f, 2.0f), -7.5f, 1e-30f}}};
  c.optimizer_step = 17;
  c.first_moments = {{"w", {2, 2}, {0.1f, 0.2f, 0.3f, 0.4f}}, {"b", {3}, {0, 0, 0}}};
  c.second_moments = c.first_moments;
  c.rng_state = "12345 678";
  c.step = 17;
  c.trainer_state = {{"epoch", 2}, {"order", {3, 1, 2}}};
  const std::string bytes = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back == c);
  CHECK(std::bit_cast<std::uint32_t>(back.parameters[0].data[1]) == std::bit_cast<std::uint32_t>(-0.0f));
  CHECK(encode_checkpoint(back) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "scene_informer_numerics.ckpt";
  save_checkpoint(path, c);
  CHECK(load_checkpoint(path) == c);

  std::string wrong_version = bytes;
  wrong_version[8] = static_cast<char>(kCheckpointVersion + 1);
  check_error(ErrorCode::kVersionMismatch, [&] { decode_checkpoint(wrong_version); });
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  check_error(ErrorCode::kVersionMismatch, [&] { decode_checkpoint(wrong_magic); });
  check_error(ErrorCode::kIo, [&] { decode_checkpoint(bytes.substr(0, bytes.size() / 2)); });
  check_error(ErrorCode::kIo, [] { load_checkpoint("/nonexistent/file.ckpt"); });
}
