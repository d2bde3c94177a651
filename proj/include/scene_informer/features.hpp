#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene_informer/scene.hpp"

namespace scene_informer {

// Per-step agent features: x, y, cos(heading), sin(heading), vx, vy, length,
// width, observed flag. Flattened time-major, feature-minor.
inline constexpr int kAgentStepFeatures = 9;
// Per-point polyline features: x, y, vector to next point (2), one-hot kind (5).
inline constexpr int kPolylinePointFeatures = 4 + kNumPolylineKinds;

struct FeatureConfig {
  // Longer polylines are split into chunks of this many points sharing their
  // boundary point; each chunk becomes one token.
  int max_points_per_polyline = 20;
};

struct SceneFeatures {
  int history = 0;           // H
  int points_per_token = 0;  // N_p

  std::vector<std::string> agent_ids;
  std::vector<AgentKind> agent_kinds;
  std::vector<double> agent_features;      // N_o x H x kAgentStepFeatures
  std::vector<std::uint8_t> agent_step_mask;  // N_o x H, 1 = observed

  std::vector<PolylineKind> polyline_kinds;
  std::vector<double> polyline_features;        // N_m x N_p x kPolylinePointFeatures
  std::vector<std::uint8_t> polyline_point_mask;  // N_m x N_p, 1 = valid

  std::size_t num_agents() const { return agent_ids.size(); }
  std::size_t num_polylines() const { return polyline_kinds.size(); }
  std::size_t num_tokens() const { return num_agents() + num_polylines(); }
  int agent_width() const { return history * kAgentStepFeatures; }
};

// One token per agent with at least one observed history step, one token per
// polyline chunk. Unobserved steps and padding slots are exactly zero.
// Expects an ego-frame, cropped scene. Throws Error(kEmptyScene) when no token
// would be produced.
SceneFeatures featurize(const Scene& scene, const FeatureConfig& config = {});

}  // namespace scene_informer
