#include "scene_informer/scene.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "scene_informer/error.hpp"

namespace scene_informer {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kVehicle: return "vehicle";
    case AgentKind::kPedestrian: return "pedestrian";
    case AgentKind::kCyclist: return "cyclist";
  }
  return "vehicle";
}

std::string_view to_string(PolylineKind kind) {
  switch (kind) {
    case PolylineKind::kLaneCenter: return "lane_center";
    case PolylineKind::kLaneBoundary: return "lane_boundary";
    case PolylineKind::kRoadEdge: return "road_edge";
    case PolylineKind::kCrosswalk: return "crosswalk";
    case PolylineKind::kStopSign: return "stop_sign";
  }
  return "road_edge";
}

std::optional<AgentKind> parse_agent_kind(std::string_view name) {
  if (name == "vehicle") return AgentKind::kVehicle;
  if (name == "pedestrian") return AgentKind::kPedestrian;
  if (name == "cyclist") return AgentKind::kCyclist;
  return std::nullopt;
}

PolylineKind parse_polyline_kind(std::string_view name) {
  if (name == "lane_center") return PolylineKind::kLaneCenter;
  if (name == "lane_boundary") return PolylineKind::kLaneBoundary;
  if (name == "crosswalk") return PolylineKind::kCrosswalk;
  if (name == "stop_sign") return PolylineKind::kStopSign;
  return PolylineKind::kRoadEdge;
}

const AgentTrack* Scene::find_agent(std::string_view id) const {
  for (const auto& a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

AgentTrack* Scene::find_agent(std::string_view id) {
  for (auto& a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const AgentTrack& Scene::ego() const {
  const AgentTrack* e = find_agent(ego_id);
  if (e == nullptr) throw Error(ErrorCode::kMissingEgo, "ego '" + ego_id + "' not among agents");
  return *e;
}

void validate_scene(const Scene& scene) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kSchema, "scene '" + scene.scene_id + "': " + what);
  };
  if (scene.H < 1 || scene.P < 0) fail("H must be >= 1 and P >= 0");
  if (!(scene.dt > 0.0)) fail("dt must be positive");
  if (!(scene.radius > 0.0)) fail("radius must be positive");
  if (scene.find_agent(scene.ego_id) == nullptr) fail("ego_id '" + scene.ego_id + "' not among agents");
  std::set<std::string> ids;
  for (const auto& a : scene.agents) {
    if (!ids.insert(a.id).second) fail("duplicate agent id '" + a.id + "'");
    if (!(a.length > 0.0) || !(a.width > 0.0)) fail("agent '" + a.id + "' has non-positive dimensions");
    if (static_cast<int>(a.states.size()) != scene.total_steps()) {
      fail("agent '" + a.id + "' has " + std::to_string(a.states.size()) + " states, expected " +
           std::to_string(scene.total_steps()));
    }
    for (std::size_t i = 0; i < a.states.size(); ++i) {
      const AgentState& s = a.states[i];
      if (i > 0 && s.t <= a.states[i - 1].t) fail("agent '" + a.id + "' time indices not strictly increasing");
      if (!(s.heading > -std::numbers::pi && s.heading <= std::numbers::pi)) {
        fail("agent '" + a.id + "' heading outside (-pi, pi]");
      }
      if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.vx) || !std::isfinite(s.vy)) {
        fail("agent '" + a.id + "' has non-finite state");
      }
    }
  }
  for (std::size_t i = 0; i < scene.map.size(); ++i) {
    if (scene.map[i].points.empty()) fail("polyline " + std::to_string(i) + " has no points");
  }
}

}  // namespace scene_informer
