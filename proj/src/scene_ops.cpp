#include "scene_informer/scene_ops.hpp"

#include "scene_informer/error.hpp"

namespace scene_informer {

Rigid2 ego_frame_transform(const Scene& scene) {
  const AgentTrack* ego = scene.find_agent(scene.ego_id);
  if (ego == nullptr) throw Error(ErrorCode::kMissingEgo, "ego '" + scene.ego_id + "' not among agents");
  const int step = scene.prediction_step();
  if (step < 0 || step >= static_cast<int>(ego->states.size())) {
    throw Error(ErrorCode::kMissingEgo, "ego '" + scene.ego_id + "' has no state at prediction step " +
                                            std::to_string(step));
  }
  const AgentState& s = ego->states[static_cast<std::size_t>(step)];
  return Rigid2::to_local(s.position(), s.heading);
}

Scene transform_scene(const Scene& scene, const Rigid2& transform) {
  Scene out = scene;
  for (auto& agent : out.agents) {
    for (auto& s : agent.states) {
      const Vec2 p = transform.apply(s.position());
      const Vec2 v = transform.apply_vector(s.velocity());
      s.x = p.x;
      s.y = p.y;
      s.vx = v.x;
      s.vy = v.y;
      s.heading = transform.apply_heading(s.heading);
    }
  }
  for (auto& line : out.map) {
    for (auto& p : line.points) p = transform.apply(p);
  }
  for (auto& occ : out.occlusions) {
    for (auto& p : occ.polygon) p = transform.apply(p);
  }
  for (auto& a : out.anchors) {
    const Vec2 p = transform.apply({a.x, a.y});
    a.x = p.x;
    a.y = p.y;
  }
  return out;
}

Scene to_ego_frame(const Scene& scene) { return transform_scene(scene, ego_frame_transform(scene)); }

Polyline resample_polyline(const Polyline& polyline, double min_spacing) {
  if (polyline.points.size() <= 1) return polyline;
  Polyline out{polyline.kind, {polyline.points.front()}};
  const std::size_t last = polyline.points.size() - 1;
  for (std::size_t i = 1; i < last; ++i) {
    if (distance(polyline.points[i], out.points.back()) >= min_spacing) out.points.push_back(polyline.points[i]);
  }
  out.points.push_back(polyline.points[last]);
  return out;
}

Scene crop_to_radius(const Scene& scene, double radius) {
  Scene out = scene;
  const int step = scene.prediction_step();
  out.agents.clear();
  for (const auto& agent : scene.agents) {
    if (agent.id == scene.ego_id || norm(agent.states.at(static_cast<std::size_t>(step)).position()) <= radius) {
      out.agents.push_back(agent);
    }
  }
  out.map.clear();
  for (const auto& line : scene.map) {
    Polyline run{line.kind, {}};
    for (const Vec2 p : line.points) {
      if (norm(p) <= radius) {
        run.points.push_back(p);
      } else if (!run.points.empty()) {
        out.map.push_back(std::move(run));
        run = Polyline{line.kind, {}};
      }
    }
    if (!run.points.empty()) out.map.push_back(std::move(run));
  }
  return out;
}

Scene prepare_scene(const Scene& scene, double min_spacing) {
  Scene ego = to_ego_frame(scene);
  for (auto& line : ego.map) line = resample_polyline(line, min_spacing);
  return crop_to_radius(ego, ego.radius);
}

}  // namespace scene_informer
