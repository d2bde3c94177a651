#include <chrono>
#include <cmath>

#include "doctest.h"
#include "scene_informer/model.hpp"
#include "scene_informer/scene_ops.hpp"
#include "scene_informer/synth.hpp"
#include "support/errors.hpp"
#include "support/permute.hpp"
#include "support/scenes.hpp"

using namespace scene_informer;
using scene_informer::testing::check_error;

namespace {

SceneFeatures scene_features(std::uint64_t seed) { return featurize(prepare_scene(generate_scene(ScenarioTemplate{}, seed))); }

std::vector<Vec2> random_anchors(Rng& rng, std::size_t n) {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)});
  return out;
}

// Rescales every weight so raw head outputs reach saturating magnitudes.
void inflate(SceneInformer<float>& model, float factor) {
  for (auto& [name, t] : model.parameters().named()) {
    for (auto& v : t.mutable_data()) v *= factor;
  }
}

}  // namespace

TEST_CASE("forward output shapes") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  const auto& c = model.config();
  const SceneFeatures f = scene_features(0);
  Rng rng(1);
  const auto anchors = random_anchors(rng, 13);
  const auto emb = model.encode_scene(f);
  CHECK(emb.shape() == nn::Shape{f.num_tokens(), c.d_model});
  const auto out = model.decode_anchors(anchors, emb);
  CHECK(out.occupancy_logit.shape() == nn::Shape{13, 1});
  CHECK(out.mode_logits.shape() == nn::Shape{13, c.K});
  CHECK(out.trajectory.shape() == nn::Shape{13 * c.K * static_cast<std::size_t>(c.P), 5});
  const std::size_t per_anchor = 1 + c.K + c.K * static_cast<std::size_t>(c.P) * 5;
  CHECK(out.occupancy_logit.numel() + out.mode_logits.numel() + out.trajectory.numel() == 13 * per_anchor);
}

TEST_CASE("prediction constraints hold for arbitrary weights") {
  for (const float factor : {1.0f, 4.0f, 30.0f}) {
    SceneInformer<float> model(ModelConfig::desk_scale());
    inflate(model, factor);
    const auto& c = model.config();
    Rng rng(static_cast<std::uint64_t>(factor));
    const auto anchors = random_anchors(rng, 20);
    const auto preds = to_predictions(model.forward(scene_features(3), anchors), anchors, c.K, static_cast<std::size_t>(c.P));
    for (const auto& p : preds) {
      CHECK(p.p_occ >= 0.0);
      CHECK(p.p_occ <= 1.0);
      if (factor == 1.0f) {
        CHECK(p.p_occ > 0.0);
        CHECK(p.p_occ < 1.0);
      }
      double total = 0.0;
      for (const double m : p.mode_probs) total += m;
      CHECK(std::abs(total - 1.0) <= 1e-6);
      for (std::size_t r = 0; r < c.K * static_cast<std::size_t>(c.P); ++r) {
        for (int k = 0; k < 5; ++k) CHECK(std::isfinite(p.trajectories[r * 5 + static_cast<std::size_t>(k)]));
        CHECK(p.trajectories[r * 5 + 2] >= 1e-2 * (1 - 1e-6));
        CHECK(p.trajectories[r * 5 + 2] <= 1e2 * (1 + 1e-6));
        CHECK(p.trajectories[r * 5 + 3] >= 1e-2 * (1 - 1e-6));
        CHECK(p.trajectories[r * 5 + 3] <= 1e2 * (1 + 1e-6));
        CHECK(std::abs(p.trajectories[r * 5 + 4]) < 1.0);
      }
    }
  }
}

TEST_CASE("means are reported relative to the global ego frame") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  const auto& c = model.config();
  const auto f = scene_features(2);
  const std::vector<Vec2> anchors{{10.0, -4.0}};
  const auto out = model.forward(f, anchors);
  const auto pred = to_predictions(out, anchors, c.K, static_cast<std::size_t>(c.P))[0];
  CHECK(pred.mean_x(0, 0, c.P) == doctest::Approx(10.0 + out.trajectory.at(0, 0)).epsilon(1e-5));
  CHECK(pred.mean_y(0, 0, c.P) == doctest::Approx(-4.0 + out.trajectory.at(0, 1)).epsilon(1e-5));
}

TEST_CASE("duplicate anchors get identical predictions") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  Rng rng(5);
  auto anchors = random_anchors(rng, 9);
  anchors.push_back(anchors[3]);
  const auto out = model.forward(scene_features(7), anchors);
  const std::size_t K = model.config().K, P = static_cast<std::size_t>(model.config().P);
  CHECK(std::abs(out.occupancy_logit.at(3) - out.occupancy_logit.at(9)) <= 1e-5);
  for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(out.mode_logits.at(3, k) - out.mode_logits.at(9, k)) <= 1e-5);
  for (std::size_t r = 0; r < K * P; ++r) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(std::abs(out.trajectory.at(3 * K * P + r, j) - out.trajectory.at(9 * K * P + r, j)) <= 1e-5);
    }
  }
}

TEST_CASE("duplicated polyline yields two identical embeddings") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  SceneFeatures f = scene_features(9);
  REQUIRE(f.num_polylines() > 0);
  std::vector<std::size_t> polys(f.num_polylines());
  for (std::size_t i = 0; i < polys.size(); ++i) polys[i] = i;
  polys.push_back(0);
  std::vector<std::size_t> agents(f.num_agents());
  for (std::size_t i = 0; i < agents.size(); ++i) agents[i] = i;
  SceneFeatures dup = f;
  dup.polyline_kinds.push_back(f.polyline_kinds[0]);
  dup.polyline_features.resize(dup.polyline_features.size() + static_cast<std::size_t>(f.points_per_token) * kPolylinePointFeatures);
  dup.polyline_point_mask.resize(dup.polyline_point_mask.size() + static_cast<std::size_t>(f.points_per_token));
  dup = testing::permute_tokens(dup, agents, polys);
  const auto emb = model.encode_scene(dup);
  const std::size_t first = f.num_agents(), last = dup.num_tokens() - 1;
  for (std::size_t c = 0; c < model.config().d_model; ++c) CHECK(std::abs(emb.at(first, c) - emb.at(last, c)) <= 1e-5);
}

TEST_CASE("permuting scene tokens permutes embeddings and leaves predictions unchanged") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  Rng rng(11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SceneFeatures f = scene_features(seed);
    const auto pa = testing::random_permutation(rng, f.num_agents());
    const auto pm = testing::random_permutation(rng, f.num_polylines());
    const SceneFeatures g = testing::permute_tokens(f, pa, pm);
    const auto ef = model.encode_scene(f);
    const auto eg = model.encode_scene(g);
    for (std::size_t i = 0; i < f.num_tokens(); ++i) {
      const std::size_t j = i < f.num_agents() ? pa[i] : f.num_agents() + pm[i - f.num_agents()];
      for (std::size_t c = 0; c < model.config().d_model; ++c) CHECK(std::abs(eg.at(i, c) - ef.at(j, c)) <= 1e-5);
    }
    const auto anchors = random_anchors(rng, 12);
    const auto a = model.decode_anchors(anchors, ef);
    const auto b = model.decode_anchors(anchors, eg);
    for (std::size_t i = 0; i < a.trajectory.numel(); ++i) CHECK(std::abs(a.trajectory.data()[i] - b.trajectory.data()[i]) <= 1e-5);
    for (std::size_t i = 0; i < a.mode_logits.numel(); ++i) CHECK(std::abs(a.mode_logits.data()[i] - b.mode_logits.data()[i]) <= 1e-5);
    for (std::size_t i = 0; i < a.occupancy_logit.numel(); ++i) {
      CHECK(std::abs(a.occupancy_logit.data()[i] - b.occupancy_logit.data()[i]) <= 1e-5);
    }
  }
}

TEST_CASE("empty token set is rejected") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  SceneFeatures empty;
  empty.history = 10;
  empty.points_per_token = 20;
  check_error(ErrorCode::kEmptyScene, [&] { model.encode_scene(empty); });
}

TEST_CASE("desk forward on 10 agents, 20 polylines, 60 anchors is under a second") {
  const SceneInformer<float> model(ModelConfig::desk_scale());
  Scene scene = testing::random_scene(4, 9, 20);
  for (auto& l : scene.map) l.points.resize(std::min<std::size_t>(l.points.size(), 20));
  const SceneFeatures f = featurize(scene);
  REQUIRE(f.num_agents() == 10);
  REQUIRE(f.num_polylines() == 20);
  Rng rng(2);
  const auto anchors = random_anchors(rng, 60);
  nn::NoGradGuard guard;
  const auto t0 = std::chrono::steady_clock::now();
  model.forward(f, anchors);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("forward " << seconds << " s");
  CHECK(seconds < 1.0);
}

TEST_CASE("full-scale preset parameter count is within 30% of 11.3M") {
  const SceneInformer<float> model(ModelConfig::full_scale());
  const double count = static_cast<double>(model.parameters().scalar_count());
  MESSAGE("full-scale parameters " << count);
  CHECK(count >= 0.7 * 11.3e6);
  CHECK(count <= 1.3 * 11.3e6);
}

TEST_CASE("model config validation and json") {
  check_error(ErrorCode::kConfig, [] { model_config_from_json({{"d_modle", 64}}); }, "model.d_modle");
  check_error(ErrorCode::kConfig, [] { model_config_from_json({{"d_model", 66}, {"enc_heads", 4}}); });
  check_error(ErrorCode::kConfig, [] { model_config_from_json({{"K", 0}}); });
  const ModelConfig full = model_config_from_json({{"preset", "full_scale"}});
  CHECK(full.d_model == 256);
  CHECK(full.K == 7);
  CHECK(full.dec_layers == 2);
  const ModelConfig custom = model_config_from_json({{"preset", "desk_scale"}, {"K", 5}});
  CHECK(custom.K == 5);
  CHECK(model_config_from_json(model_config_to_json(custom)).K == 5);
  CHECK(model_config_to_json(model_config_from_json(model_config_to_json(full))) == model_config_to_json(full));
}

TEST_CASE("same seed, same weights") {
  const SceneInformer<float> a(ModelConfig::desk_scale());
  const SceneInformer<float> b(ModelConfig::desk_scale());
  ModelConfig other = ModelConfig::desk_scale();
  other.seed = 1;
  const SceneInformer<float> c(other);
  const auto& na = a.parameters().named();
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    const auto x = na[i].second.data();
    const auto y = b.parameters().named()[i].second.data();
    const auto z = c.parameters().named()[i].second.data();
    all_equal &= std::equal(x.begin(), x.end(), y.begin());
    any_diff |= !std::equal(x.begin(), x.end(), z.begin());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}
