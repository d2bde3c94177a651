#include <cmath>
#include <numbers>

#include "doctest.h"
#include "scene_informer/error.hpp"
#include "scene_informer/features.hpp"
#include "scene_informer/scene_ops.hpp"
#include "support/scenes.hpp"

using namespace scene_informer;
using scene_informer::testing::basic_scene;
using scene_informer::testing::random_scene;
using scene_informer::testing::straight_track;

namespace {

// Brute-force greedy walk along cumulative arc length for collinear input.
std::vector<double> greedy_arc_positions(const std::vector<double>& arc, double spacing) {
  std::vector<double> kept{arc.front()};
  for (std::size_t i = 1; i + 1 < arc.size(); ++i) {
    if (arc[i] - kept.back() >= spacing - 1e-12) kept.push_back(arc[i]);
  }
  kept.push_back(arc.back());
  return kept;
}

}  // namespace

TEST_CASE("ego frame: rotated ego maps agent ahead onto +x") {
  Scene scene = basic_scene({straight_track("a", {5.0, 13.0}, 0.0, 0.0)}, {}, {5.0, 3.0}, std::numbers::pi / 2);
  const Scene ego = to_ego_frame(scene);
  const AgentState& s = ego.find_agent("a")->states[9];
  CHECK(s.x == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(s.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.heading == doctest::Approx(-std::numbers::pi / 2));
  const AgentState& e = ego.ego().states[9];
  CHECK(std::abs(e.x) < 1e-12);
  CHECK(std::abs(e.y) < 1e-12);
  CHECK(std::abs(e.heading) < 1e-12);
}

TEST_CASE("ego frame: identity and idempotence") {
  const Scene scene = random_scene(3);
  CHECK(to_ego_frame(scene) == scene);

  Scene moved = basic_scene({straight_track("a", {-4.0, 20.0}, 1.0, 3.0)}, {}, {12.0, -7.0}, 2.5, 4.0);
  const Scene once = to_ego_frame(moved);
  const Scene twice = to_ego_frame(once);
  for (std::size_t i = 0; i < once.agents.size(); ++i) {
    for (std::size_t t = 0; t < once.agents[i].states.size(); ++t) {
      CHECK(twice.agents[i].states[t].x == doctest::Approx(once.agents[i].states[t].x).epsilon(1e-12));
      CHECK(twice.agents[i].states[t].y == doctest::Approx(once.agents[i].states[t].y).epsilon(1e-12));
    }
  }
}

TEST_CASE("ego frame: missing ego is a structured error") {
  Scene scene = random_scene(1);
  scene.ego_id = "nobody";
  CHECK_THROWS_AS(to_ego_frame(scene), Error);
  try {
    to_ego_frame(scene);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingEgo);
  }
  scene.ego_id = "ego";
  scene.agents.front().states.resize(3);
  CHECK_THROWS_AS(to_ego_frame(scene), Error);
}

TEST_CASE("ego frame: headings stay in (-pi, pi]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Scene scene = random_scene(seed);
    scene.agents.front() = straight_track("ego", {3.0, 4.0}, -3.0 + 0.3 * static_cast<double>(seed), 2.0);
    for (const auto& agent : to_ego_frame(scene).agents) {
      for (const auto& s : agent.states) {
        CHECK(s.heading > -std::numbers::pi);
        CHECK(s.heading <= std::numbers::pi);
      }
    }
  }
}

TEST_CASE("resample: 13 collinear points at 0.5 m") {
  Polyline line{PolylineKind::kLaneCenter, {}};
  std::vector<double> arc;
  for (int i = 0; i <= 12; ++i) {
    line.points.push_back({0.5 * i, 0.0});
    arc.push_back(0.5 * i);
  }
  const std::vector<double> expected = greedy_arc_positions(arc, 1.5);
  REQUIRE(expected == std::vector<double>{0.0, 1.5, 3.0, 4.5, 6.0});
  const Polyline out = resample_polyline(line, 1.5);
  REQUIRE(out.points.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(out.points[i].x == doctest::Approx(expected[i]));
    CHECK(out.points[i].y == 0.0);
  }
}

TEST_CASE("resample: endpoints and degenerate input") {
  const Polyline two{PolylineKind::kRoadEdge, {{0, 0}, {10, 0}}};
  CHECK(resample_polyline(two, 1.5) == two);
  const Polyline single{PolylineKind::kStopSign, {{1, 2}}};
  CHECK(resample_polyline(single, 1.5) == single);
  const Polyline same{PolylineKind::kCrosswalk, {{1, 1}, {1, 1}, {1, 1}, {1, 1}}};
  const Polyline out = resample_polyline(same, 1.5);
  CHECK(out.points == std::vector<Vec2>{{1, 1}, {1, 1}});
}

TEST_CASE("resample: idempotent and spaced on random polylines") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Polyline line{PolylineKind::kLaneBoundary, {}};
    Vec2 p{};
    const int n = rng.uniform_int(1, 60);
    for (int i = 0; i < n; ++i) {
      p = p + Vec2{rng.uniform(-1.0, 2.0), rng.uniform(-1.0, 1.0)};
      line.points.push_back(p);
    }
    const Polyline once = resample_polyline(line, 1.5);
    CHECK(resample_polyline(once, 1.5) == once);
    CHECK(once.points.front() == line.points.front());
    CHECK(once.points.back() == line.points.back());
    for (std::size_t i = 1; i + 1 < once.points.size(); ++i) {
      CHECK(distance(once.points[i], once.points[i - 1]) >= 1.5);
    }
  }
}

TEST_CASE("crop: agent threshold at 60 m") {
  Scene scene = basic_scene({straight_track("far", {61.0, 0.0}, 0.0, 0.0), straight_track("near", {0.0, 59.0}, 0.0, 0.0)});
  const Scene out = crop_to_radius(scene, 60.0);
  CHECK(out.find_agent("far") == nullptr);
  CHECK(out.find_agent("near") != nullptr);
  CHECK(out.find_agent("ego") != nullptr);
}

TEST_CASE("crop: polyline leaving and re-entering the disk splits into runs") {
  Polyline line{PolylineKind::kLaneCenter, {}};
  for (int i = -80; i <= 80; i += 2) {
    // Dips outside the disk around x = 0 (y = 65), inside near |x| ~ 40.
    const double x = i;
    const double y = std::abs(x) < 20 ? 65.0 : (std::abs(x) < 50 ? 20.0 : 70.0);
    line.points.push_back({x, y});
  }
  Scene scene = basic_scene({}, {line});
  const Scene out = crop_to_radius(scene, 60.0);

  // Point-wise membership oracle: count maximal runs of inside points.
  std::size_t runs = 0;
  bool inside_prev = false;
  for (const Vec2 p : line.points) {
    const bool inside = std::hypot(p.x, p.y) <= 60.0;
    if (inside && !inside_prev) ++runs;
    inside_prev = inside;
  }
  REQUIRE(runs == 2);
  REQUIRE(out.map.size() == runs);
  for (const auto& piece : out.map) {
    for (const Vec2 p : piece.points) CHECK(norm(p) <= 60.0);
  }
}

TEST_CASE("crop: never adds agent tokens or map points") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scene scene = random_scene(seed, 8, 6);
    const Scene out = crop_to_radius(scene, 25.0);
    CHECK(featurize(out).num_agents() <= featurize(scene).num_agents());
    std::size_t before = 0, after = 0;
    for (const auto& l : scene.map) before += l.points.size();
    for (const auto& l : out.map) after += l.points.size();
    CHECK(after <= before);
  }
}

TEST_CASE("featurize: token counts and history mask") {
  Scene scene = random_scene(5, 2, 5);
  for (auto& l : scene.map) l.points.resize(std::min<std::size_t>(l.points.size(), 20));
  SceneFeatures f = featurize(scene);
  CHECK(f.num_agents() == 3);
  CHECK(f.num_polylines() == 5);

  auto& partial = scene.agents[1];
  for (int t = 0; t < 6; ++t) partial.states[static_cast<std::size_t>(t)].observed = false;
  f = featurize(scene);
  const std::size_t H = 10;
  for (std::size_t t = 0; t < H; ++t) {
    CHECK(f.agent_step_mask[1 * H + t] == (t >= 6 ? 1 : 0));
    if (t < 6) {
      for (int c = 0; c < kAgentStepFeatures; ++c) {
        CHECK(f.agent_features[(1 * H + t) * kAgentStepFeatures + static_cast<std::size_t>(c)] == 0.0);
      }
    }
  }
}

TEST_CASE("featurize: agents without an observed history step get no token") {
  Scene scene = random_scene(6, 3, 1);
  for (int t = 0; t < 10; ++t) scene.agents[2].states[static_cast<std::size_t>(t)].observed = false;
  const SceneFeatures f = featurize(scene);
  CHECK(f.num_agents() == 3);
  CHECK(std::find(f.agent_ids.begin(), f.agent_ids.end(), scene.agents[2].id) == f.agent_ids.end());
}

TEST_CASE("featurize: polyline point features and chunking") {
  Polyline line{PolylineKind::kCrosswalk, {}};
  for (int i = 0; i < 45; ++i) line.points.push_back({1.5 * i, 2.0});
  Scene scene = basic_scene({}, {line});
  const SceneFeatures f = featurize(scene);
  // 45 points in chunks of 20 sharing boundary points: [0,20), [19,39), [38,45).
  REQUIRE(f.num_polylines() == 3);
  const std::size_t np = 20;
  const auto point = [&](std::size_t token, std::size_t slot, std::size_t c) {
    return f.polyline_features[(token * np + slot) * kPolylinePointFeatures + c];
  };
  CHECK(point(0, 0, 2) == doctest::Approx(1.5));
  CHECK(point(0, 19, 0) == doctest::Approx(1.5 * 19));
  CHECK(point(0, 19, 2) == 0.0);
  CHECK(point(0, 19, 3) == 0.0);
  CHECK(point(1, 0, 0) == doctest::Approx(1.5 * 19));
  CHECK(point(2, 6, 0) == doctest::Approx(1.5 * 44));
  CHECK(point(2, 6, 2) == 0.0);
  CHECK(f.polyline_point_mask[2 * np + 6] == 1);
  CHECK(f.polyline_point_mask[2 * np + 7] == 0);
  for (std::size_t c = 0; c < static_cast<std::size_t>(kPolylinePointFeatures); ++c) CHECK(point(2, 7, c) == 0.0);
  CHECK(point(1, 3, 4 + static_cast<std::size_t>(PolylineKind::kCrosswalk)) == 1.0);
  CHECK(point(1, 3, 4 + static_cast<std::size_t>(PolylineKind::kLaneCenter)) == 0.0);
}

TEST_CASE("featurize: empty scene is a structured error") {
  Scene scene = basic_scene({});
  for (auto& s : scene.agents.front().states) s.observed = false;
  try {
    featurize(scene);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyScene);
  }
}

TEST_CASE("featurize: invariant under a global rigid transform") {
  Rng rng(99);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Scene scene = random_scene(seed);
    scene.agents.front() = straight_track("ego", {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)},
                                          rng.uniform(-3.0, 3.0), 3.0);
    const Rigid2 global{rng.uniform(-3.1, 3.1), {rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)}};
    const SceneFeatures a = featurize(to_ego_frame(scene));
    const SceneFeatures b = featurize(to_ego_frame(transform_scene(scene, global)));
    REQUIRE(a.agent_features.size() == b.agent_features.size());
    REQUIRE(a.polyline_features.size() == b.polyline_features.size());
    CHECK(a.agent_step_mask == b.agent_step_mask);
    CHECK(a.polyline_point_mask == b.polyline_point_mask);
    for (std::size_t i = 0; i < a.agent_features.size(); ++i) CHECK(std::abs(a.agent_features[i] - b.agent_features[i]) <= 1e-9);
    for (std::size_t i = 0; i < a.polyline_features.size(); ++i) {
      CHECK(std::abs(a.polyline_features[i] - b.polyline_features[i]) <= 1e-9);
    }
  }
}

TEST_CASE("featurize: finite values, masked slots exactly zero") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Scene scene = prepare_scene(random_scene(seed, 7, 8));
    Rng rng(seed);
    for (auto& agent : scene.agents) {
      for (int t = 0; t < 10; ++t) agent.states[static_cast<std::size_t>(t)].observed = rng.bernoulli(0.7);
    }
    const SceneFeatures f = featurize(scene);
    for (const double v : f.agent_features) CHECK(std::isfinite(v));
    for (const double v : f.polyline_features) CHECK(std::isfinite(v));
    for (std::size_t i = 0; i < f.agent_step_mask.size(); ++i) {
      if (f.agent_step_mask[i]) continue;
      for (int c = 0; c < kAgentStepFeatures; ++c) CHECK(f.agent_features[i * kAgentStepFeatures + static_cast<std::size_t>(c)] == 0.0);
    }
    for (std::size_t i = 0; i < f.polyline_point_mask.size(); ++i) {
      if (f.polyline_point_mask[i]) continue;
      for (int c = 0; c < kPolylinePointFeatures; ++c) {
        CHECK(f.polyline_features[i * kPolylinePointFeatures + static_cast<std::size_t>(c)] == 0.0);
      }
    }
  }
}
