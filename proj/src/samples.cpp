#include "scene_informer/samples.hpp"

#include "scene_informer/error.hpp"
#include "scene_informer/rng.hpp"

namespace scene_informer {

namespace {

Sample finish(const Scene& scene, const ObservabilityRegime& regime, RegimeResult visibility,
              std::optional<std::string> occluder, std::uint64_t seed, const SampleConfig& config) {
  Sample s;
  s.scene_id = scene.scene_id;
  s.regime = regime;
  if (occluder) {
    s.occluder_id = *occluder;
    s.anchors = build_anchor_set(visibility.scene, visibility.shadows, *occluder, config.n_occ_anchors,
                                 mix_seed(seed, 0x616e63686f72ULL));
  } else {
    s.anchors = build_occluded_query_set(visibility.scene, {});
  }
  s.features = featurize(visibility.scene, config.features);
  s.visibility = std::move(visibility);
  return s;
}

}  // namespace

std::uint64_t sample_seed(std::uint64_t seed, const std::string& scene_id, std::uint64_t epoch) {
  return mix_seed(mix_seed(seed, epoch), hash_string(scene_id));
}

Sample make_training_sample(const Scene& scene, std::uint64_t seed, const SampleConfig& config) {
  const ObservabilityRegime regime = ObservabilityRegime::single_occluder(seed);
  if (scene.agents.size() < 2) return finish(scene, regime, apply_regime(scene, ObservabilityRegime::full()), {}, seed, config);
  RegimeResult visibility = apply_regime(scene, regime);
  std::optional<std::string> occluder;
  if (visibility.shadow_of(visibility.occluder_ids.front()) != nullptr) occluder = visibility.occluder_ids.front();
  return finish(scene, regime, std::move(visibility), occluder, seed, config);
}

Sample make_regime_sample(const Scene& scene, const ObservabilityRegime& regime, std::uint64_t seed,
                          const SampleConfig& config) {
  RegimeResult visibility = apply_regime(scene, regime);
  std::optional<std::string> occluder;
  if (!visibility.shadows.empty()) {
    Rng rng(mix_seed(seed, 0x6f6363ULL));
    occluder = visibility.shadows[rng.uniform_int(visibility.shadows.size())].occluder_id;
  }
  return finish(scene, regime, std::move(visibility), occluder, seed, config);
}

Sample make_query_sample(const Scene& scene, const ObservabilityRegime& regime, const std::string& occluder_id,
                         std::uint64_t seed, const SampleConfig& config) {
  RegimeResult visibility = apply_regime(scene, regime);
  if (visibility.shadow_of(occluder_id) == nullptr) {
    throw Error(ErrorCode::kNoOcclusion, "scene '" + scene.scene_id + "': no occlusion cast by '" + occluder_id + "'");
  }
  return finish(scene, regime, std::move(visibility), occluder_id, seed, config);
}

AnchorSet occluded_agent_queries(const Sample& sample) {
  return build_occluded_query_set(sample.visibility.scene, sample.visibility.occluded_agent_ids);
}

std::vector<Vec2> anchor_positions(const AnchorSet& anchors) {
  std::vector<Vec2> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors.anchors) out.push_back(a.position);
  return out;
}

}  // namespace scene_informer
