#include "scene_informer/features.hpp"

#include <algorithm>
#include <cmath>

#include "scene_informer/error.hpp"

namespace scene_informer {

SceneFeatures featurize(const Scene& scene, const FeatureConfig& config) {
  if (config.max_points_per_polyline < 2) {
    throw Error(ErrorCode::kInvalidArgument, "max_points_per_polyline must be >= 2");
  }
  SceneFeatures f;
  f.history = scene.H;
  f.points_per_token = config.max_points_per_polyline;
  const int H = scene.H;

  for (const auto& agent : scene.agents) {
    const bool any_observed = std::any_of(agent.states.begin(), agent.states.begin() + H,
                                          [](const AgentState& s) { return s.observed; });
    if (!any_observed) continue;
    f.agent_ids.push_back(agent.id);
    f.agent_kinds.push_back(agent.kind);
    for (int t = 0; t < H; ++t) {
      const AgentState& s = agent.states[static_cast<std::size_t>(t)];
      if (!s.observed) {
        f.agent_features.insert(f.agent_features.end(), kAgentStepFeatures, 0.0);
        f.agent_step_mask.push_back(0);
        continue;
      }
      f.agent_features.insert(f.agent_features.end(),
                              {s.x, s.y, std::cos(s.heading), std::sin(s.heading), s.vx, s.vy, agent.length,
                               agent.width, 1.0});
      f.agent_step_mask.push_back(1);
    }
  }

  const std::size_t np = static_cast<std::size_t>(config.max_points_per_polyline);
  for (const auto& line : scene.map) {
    const std::size_t n = line.points.size();
    for (std::size_t begin = 0;; begin += np - 1) {
      const std::size_t end = std::min(n, begin + np);
      f.polyline_kinds.push_back(line.kind);
      for (std::size_t slot = 0; slot < np; ++slot) {
        const std::size_t i = begin + slot;
        if (i >= end) {
          f.polyline_features.insert(f.polyline_features.end(), kPolylinePointFeatures, 0.0);
          f.polyline_point_mask.push_back(0);
          continue;
        }
        const Vec2 p = line.points[i];
        const Vec2 next = (i + 1 < end) ? line.points[i + 1] - p : Vec2{};
        f.polyline_features.insert(f.polyline_features.end(), {p.x, p.y, next.x, next.y});
        for (int k = 0; k < kNumPolylineKinds; ++k) {
          f.polyline_features.push_back(static_cast<int>(line.kind) == k ? 1.0 : 0.0);
        }
        f.polyline_point_mask.push_back(1);
      }
      if (end >= n) break;
    }
  }

  if (f.num_tokens() == 0) {
    throw Error(ErrorCode::kEmptyScene, "scene '" + scene.scene_id + "' has no observed agents and no polylines");
  }
  return f;
}

}  // namespace scene_informer
