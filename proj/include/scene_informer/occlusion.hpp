#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scene_informer/geometry.hpp"
#include "scene_informer/scene.hpp"

namespace scene_informer {

struct Footprint {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  OrientedBox box() const { return {center, heading, length, width}; }
  static Footprint of(const AgentTrack& agent, std::size_t step) {
    const AgentState& s = agent.states.at(step);
    return {s.position(), s.heading, agent.length, agent.width};
  }
};

struct ShadowPolygon {
  std::string occluder_id;
  std::vector<Vec2> vertices;  // counterclockwise, closed implicitly
};

inline constexpr double kArcChordDegrees = 2.0;

// Maximum gap between the chordal arc approximation and the true disk
// boundary: radius * (1 - cos(1 deg)).
double arc_tolerance(double radius);

// Ground-truth line of sight: true iff the segment from `ego` to `q` meets the
// footprint rectangle. Points inside the rectangle are occluded.
// Throws Error(kEgoInsideFootprint) when ego lies inside the rectangle.
bool is_point_occluded(Vec2 ego, const Footprint& footprint, Vec2 q);

// Region hidden by `footprint`, truncated at the disk of `radius` around ego.
// Vertices: first silhouette corner, its ray end on the boundary, chordal arc
// (<= 2 deg spacing), second ray end, second silhouette corner, then any
// ego-facing corner. Returns nullopt when the footprint center lies outside the
// disk. When a corner pokes past the disk the truncation radius grows to
// enclose it.
std::optional<ShadowPolygon> shadow_polygon(Vec2 ego, const Footprint& footprint, double radius,
                                            std::string occluder_id = {});

enum class RegimeMode { kFull, kPartial, kLimited, kSingleOccluder };

struct ObservabilityRegime {
  RegimeMode mode = RegimeMode::kFull;
  double p = 0.0;  // partial only
  std::uint64_t seed = 0;
  std::string occluder_id;  // single_occluder: fixed occluder instead of a seeded draw

  static ObservabilityRegime full() { return {RegimeMode::kFull, 0.0, 0, {}}; }
  static ObservabilityRegime limited() { return {RegimeMode::kLimited, 1.0, 0, {}}; }
  static ObservabilityRegime partial(double p, std::uint64_t seed) { return {RegimeMode::kPartial, p, seed, {}}; }
  static ObservabilityRegime single_occluder(std::uint64_t seed) {
    return {RegimeMode::kSingleOccluder, 0.0, seed, {}};
  }
  static ObservabilityRegime single_occluder(std::string occluder_id) {
    return {RegimeMode::kSingleOccluder, 0.0, 0, std::move(occluder_id)};
  }
};

std::string regime_name(const ObservabilityRegime& regime);

// Per-agent uniform in [0,1) drawn from (seed, agent id); shared by every p so
// occluder sets are nested as p grows.
double occluder_draw(std::uint64_t seed, const std::string& agent_id);

struct RegimeResult {
  Scene scene;                            // observed flags set, occlusions annotated
  std::vector<std::string> occluder_ids;  // active occluders
  std::vector<ShadowPolygon> shadows;     // at prediction time, one per active occluder inside the disk
  std::vector<std::string> occluded_agent_ids;  // unobserved at prediction time

  const ShadowPolygon* shadow_of(const std::string& occluder_id) const;
};

// Expects an ego-frame, cropped scene. Visibility is evaluated per timestep
// from the ego position at that step against active occluder footprints at that
// step. The ego never occludes and is always observed; occluders do not hide
// themselves. Throws Error(kTooFewAgents) for single_occluder with < 2 agents
// and Error(kNoOcclusion) when a fixed occluder id is not a non-ego agent.
RegimeResult apply_regime(const Scene& scene, const ObservabilityRegime& regime);

enum class AnchorSource { kObservedAgent, kOcclusion, kOccludedAgent };

struct Anchor {
  Vec2 position;
  AnchorSource source = AnchorSource::kOcclusion;
  std::string source_id;  // agent id or occluder id
  bool gt_occupied = false;
  std::optional<std::string> gt_agent_id;
  std::vector<Vec2> gt_future;  // P positions when occupied, empty otherwise
};

struct AnchorSet {
  std::vector<Anchor> anchors;

  std::size_t size() const { return anchors.size(); }
  std::size_t count(AnchorSource source) const;
};

inline constexpr int kDefaultOcclusionAnchors = 48;

// Future positions of `agent` over the P steps after prediction time.
std::vector<Vec2> future_positions(const Scene& scene, const AgentTrack& agent);

// One anchor per agent observed at prediction time (ego included) plus
// `n_occ_anchors` points sampled uniformly inside the chosen occluder's shadow.
// An occlusion anchor is occupied iff it falls inside the prediction-time
// footprint of an occluded agent; the nearest such agent center wins ties.
// Throws Error(kEmptyShadow) when the occluder has no shadow and
// Error(kDegenerateShadow) after 1000 * n_occ_anchors rejected proposals.
AnchorSet build_anchor_set(const Scene& scene, const std::vector<ShadowPolygon>& shadows,
                           const std::string& occluder_id, int n_occ_anchors, std::uint64_t seed);

// Observed-agent anchors plus one anchor at each occluded agent's true
// prediction-time position (used to score trajectories of hidden agents).
AnchorSet build_occluded_query_set(const Scene& scene, const std::vector<std::string>& occluded_agent_ids);

std::vector<AnchorRecord> to_records(const AnchorSet& set);

}  // namespace scene_informer
