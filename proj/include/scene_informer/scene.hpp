#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scene_informer/geometry.hpp"

namespace scene_informer {

enum class AgentKind { kVehicle, kPedestrian, kCyclist };
inline constexpr int kNumAgentKinds = 3;

enum class PolylineKind { kLaneCenter, kLaneBoundary, kRoadEdge, kCrosswalk, kStopSign };
inline constexpr int kNumPolylineKinds = 5;

std::string_view to_string(AgentKind kind);
std::string_view to_string(PolylineKind kind);
std::optional<AgentKind> parse_agent_kind(std::string_view name);
// Unknown names map to road_edge so externally converted maps always load.
PolylineKind parse_polyline_kind(std::string_view name);

struct AgentState {
  int t = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  bool observed = true;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct AgentTrack {
  std::string id;
  AgentKind kind = AgentKind::kVehicle;
  double length = 4.5;
  double width = 2.0;
  std::vector<AgentState> states;

  OrientedBox footprint(std::size_t step) const {
    const AgentState& s = states.at(step);
    return {s.position(), s.heading, length, width};
  }
  friend bool operator==(const AgentTrack&, const AgentTrack&) = default;
};

struct Polyline {
  PolylineKind kind = PolylineKind::kLaneCenter;
  std::vector<Vec2> points;
  friend bool operator==(const Polyline&, const Polyline&) = default;
};

// Optional annotations carried alongside a scene in the line format.
struct OcclusionRecord {
  std::string occluder_id;
  std::vector<Vec2> polygon;
  friend bool operator==(const OcclusionRecord&, const OcclusionRecord&) = default;
};

struct AnchorRecord {
  double x = 0.0;
  double y = 0.0;
  std::string source;  // "observed_agent:<id>" or "occlusion:<occluder_id>"
  bool gt_occupied = false;
  std::optional<std::string> gt_agent_id;
  friend bool operator==(const AnchorRecord&, const AnchorRecord&) = default;
};

struct Scene {
  std::string scene_id;
  double dt = 0.1;
  int H = 10;
  int P = 40;
  std::string ego_id;
  double radius = 60.0;
  std::vector<AgentTrack> agents;
  std::vector<Polyline> map;
  std::vector<OcclusionRecord> occlusions;
  std::vector<AnchorRecord> anchors;

  // Prediction time is the last history step.
  int prediction_step() const { return H - 1; }
  int total_steps() const { return H + P; }

  const AgentTrack* find_agent(std::string_view id) const;
  AgentTrack* find_agent(std::string_view id);
  const AgentTrack& ego() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Throws Error(kSchema) describing the first violated invariant.
void validate_scene(const Scene& scene);

}  // namespace scene_informer
