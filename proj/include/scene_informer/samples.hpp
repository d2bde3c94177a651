#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scene_informer/features.hpp"
#include "scene_informer/occlusion.hpp"
#include "scene_informer/scene.hpp"

namespace scene_informer {

struct SampleConfig {
  double min_spacing = 1.5;
  int n_occ_anchors = kDefaultOcclusionAnchors;
  FeatureConfig features;
};

// One model input: an ego-frame scene under a regime, its token features and
// the anchors to query.
struct Sample {
  std::string scene_id;
  ObservabilityRegime regime;
  RegimeResult visibility;
  std::string occluder_id;  // occlusion of interest; empty when there is none
  AnchorSet anchors;
  SceneFeatures features;
};

// Per-scene sample seed; epoch 0 is also used for fixed (non-resampled) runs.
std::uint64_t sample_seed(std::uint64_t seed, const std::string& scene_id, std::uint64_t epoch = 0);

// Training sample: single_occluder regime drawn from `seed`, anchors in that
// occluder's shadow. `scene` must already be prepared (ego frame, resampled,
// cropped). When the occluder casts no shadow (or the scene holds only the
// ego) the anchors cover observed agents only.
Sample make_training_sample(const Scene& scene, std::uint64_t seed, const SampleConfig& config = {});

// Applies `regime`, picks the occlusion of interest uniformly (from `seed`)
// among active occluders with a shadow and samples anchors there. Without any
// shadow the anchor set holds only observed agents.
Sample make_regime_sample(const Scene& scene, const ObservabilityRegime& regime, std::uint64_t seed,
                          const SampleConfig& config = {});

// As above but the occlusion of interest is given. Throws Error(kNoOcclusion)
// when that agent casts no shadow in the regime.
Sample make_query_sample(const Scene& scene, const ObservabilityRegime& regime, const std::string& occluder_id,
                         std::uint64_t seed, const SampleConfig& config = {});

// Anchors at observed agents plus the true positions of every occluded agent.
AnchorSet occluded_agent_queries(const Sample& sample);

std::vector<Vec2> anchor_positions(const AnchorSet& anchors);

}  // namespace scene_informer
