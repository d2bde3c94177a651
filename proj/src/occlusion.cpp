#include "scene_informer/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scene_informer/error.hpp"
#include "scene_informer/rng.hpp"

namespace scene_informer {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Clips the parametric segment e + t*d, t in [0,1], against one slab
// |coordinate| <= half. Returns false when the clip interval empties.
bool clip_slab(double e, double d, double half, double& t0, double& t1) {
  if (d == 0.0) return std::abs(e) <= half;
  double a = (-half - e) / d;
  double b = (half - e) / d;
  if (a > b) std::swap(a, b);
  t0 = std::max(t0, a);
  t1 = std::min(t1, b);
  return t0 <= t1;
}

}  // namespace

double arc_tolerance(double radius) { return radius * (1.0 - std::cos(0.5 * kArcChordDegrees * kDegToRad)); }

bool is_point_occluded(Vec2 ego, const Footprint& footprint, Vec2 q) {
  const OrientedBox box = footprint.box();
  if (box.contains(ego)) throw Error(ErrorCode::kEgoInsideFootprint, "ego lies inside the occluder footprint");
  const Vec2 e = box.to_local(ego);
  const Vec2 d = box.to_local(q) - e;
  double t0 = 0.0;
  double t1 = 1.0;
  return clip_slab(e.x, d.x, 0.5 * box.length, t0, t1) && clip_slab(e.y, d.y, 0.5 * box.width, t0, t1);
}

std::optional<ShadowPolygon> shadow_polygon(Vec2 ego, const Footprint& footprint, double radius,
                                            std::string occluder_id) {
  const OrientedBox box = footprint.box();
  if (box.contains(ego)) throw Error(ErrorCode::kEgoInsideFootprint, "ego lies inside the occluder footprint");
  if (distance(ego, footprint.center) > radius) return std::nullopt;

  const auto corners = box.corners();
  const Vec2 axis = footprint.center - ego;
  std::array<double, 4> rel{};
  double far = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 v = corners[i] - ego;
    rel[i] = std::atan2(cross(axis, v), dot(axis, v));
    far = std::max(far, norm(v));
  }
  // Angular extrema; on ties the nearer corner is the silhouette vertex.
  auto pick = [&](bool want_min) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 4; ++i) {
      const bool better = want_min ? rel[i] < rel[best] : rel[i] > rel[best];
      const bool tie = rel[i] == rel[best] && distance(corners[i], ego) < distance(corners[best], ego);
      if (better || tie) best = i;
    }
    return best;
  };
  const std::size_t ia = pick(true);
  const std::size_t ib = pick(false);
  const Vec2 a = corners[ia];
  const Vec2 b = corners[ib];

  const double truncation = std::max(radius, far * (1.0 + 1e-9));
  const double theta_a = std::atan2(a.y - ego.y, a.x - ego.x);
  const double span = rel[ib] - rel[ia];
  const int chords = std::max(1, static_cast<int>(std::ceil(span / (kArcChordDegrees * kDegToRad) - 1e-12)));

  ShadowPolygon shadow{std::move(occluder_id), {}};
  shadow.vertices.reserve(static_cast<std::size_t>(chords) + 4);
  shadow.vertices.push_back(a);
  for (int k = 0; k <= chords; ++k) {
    const double theta = theta_a + span * static_cast<double>(k) / static_cast<double>(chords);
    shadow.vertices.push_back(ego + truncation * unit_vector(theta));
  }
  shadow.vertices.push_back(b);
  // Ego-facing corner strictly between the silhouette vertices.
  const double ego_side = cross(b - a, ego - a);
  for (std::size_t i = 0; i < 4; ++i) {
    if (i == ia || i == ib) continue;
    const double side = cross(b - a, corners[i] - a);
    if ((side > 0.0 && ego_side > 0.0) || (side < 0.0 && ego_side < 0.0)) shadow.vertices.push_back(corners[i]);
  }
  return shadow;
}

std::string regime_name(const ObservabilityRegime& regime) {
  switch (regime.mode) {
    case RegimeMode::kFull: return "full";
    case RegimeMode::kLimited: return "limited";
    case RegimeMode::kSingleOccluder: return "single_occluder";
    case RegimeMode::kPartial: {
      std::string s = std::to_string(regime.p);
      return "partial(" + s.substr(0, s.find_last_not_of('0') + 1) + ")";
    }
  }
  return "unknown";
}

double occluder_draw(std::uint64_t seed, const std::string& agent_id) {
  return static_cast<double>(mix_seed(seed, hash_string(agent_id)) >> 11) * 0x1.0p-53;
}

const ShadowPolygon* RegimeResult::shadow_of(const std::string& occluder_id) const {
  for (const auto& s : shadows) {
    if (s.occluder_id == occluder_id) return &s;
  }
  return nullptr;
}

RegimeResult apply_regime(const Scene& scene, const ObservabilityRegime& regime) {
  if (regime.mode == RegimeMode::kPartial && !(regime.p >= 0.0 && regime.p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "partial observability fraction must lie in [0, 1]");
  }
  RegimeResult result{scene, {}, {}, {}};
  Scene& out = result.scene;
  out.occlusions.clear();
  for (auto& agent : out.agents) {
    for (auto& s : agent.states) s.observed = true;
  }

  std::vector<std::size_t> occluders;
  switch (regime.mode) {
    case RegimeMode::kFull:
      break;
    case RegimeMode::kLimited:
    case RegimeMode::kPartial:
      for (std::size_t i = 0; i < out.agents.size(); ++i) {
        const auto& agent = out.agents[i];
        if (agent.id == out.ego_id) continue;
        if (regime.mode == RegimeMode::kLimited || occluder_draw(regime.seed, agent.id) < regime.p) {
          occluders.push_back(i);
        }
      }
      break;
    case RegimeMode::kSingleOccluder: {
      if (!regime.occluder_id.empty()) {
        for (std::size_t i = 0; i < out.agents.size(); ++i) {
          if (out.agents[i].id == regime.occluder_id && out.agents[i].id != out.ego_id) occluders.push_back(i);
        }
        if (occluders.empty()) {
          throw Error(ErrorCode::kNoOcclusion, "no occlusion: '" + regime.occluder_id + "' is not a non-ego agent of scene '" +
                                                   out.scene_id + "'");
        }
        break;
      }
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < out.agents.size(); ++i) {
        if (out.agents[i].id != out.ego_id) candidates.push_back(i);
      }
      if (candidates.empty()) {
        throw Error(ErrorCode::kTooFewAgents, "single_occluder regime needs at least 2 agents in scene '" +
                                                  out.scene_id + "'");
      }
      Rng rng(regime.seed);
      occluders.push_back(candidates[rng.uniform_int(candidates.size())]);
      break;
    }
  }
  if (occluders.empty()) return result;

  const AgentTrack& ego = scene.ego();
  const auto steps = static_cast<std::size_t>(out.total_steps());
  for (std::size_t t = 0; t < steps; ++t) {
    const Vec2 eye = ego.states[t].position();
    for (const std::size_t o : occluders) {
      const Footprint fp = Footprint::of(scene.agents[o], t);
      if (fp.box().contains(eye)) continue;
      for (std::size_t i = 0; i < out.agents.size(); ++i) {
        AgentState& s = out.agents[i].states[t];
        if (i == o || out.agents[i].id == out.ego_id || !s.observed) continue;
        if (is_point_occluded(eye, fp, s.position())) s.observed = false;
      }
    }
  }

  const auto pred = static_cast<std::size_t>(out.prediction_step());
  const Vec2 eye = ego.states[pred].position();
  for (const std::size_t o : occluders) {
    const AgentTrack& occ = scene.agents[o];
    result.occluder_ids.push_back(occ.id);
    const Footprint fp = Footprint::of(occ, pred);
    if (fp.box().contains(eye)) continue;
    if (auto shadow = shadow_polygon(eye, fp, out.radius, occ.id)) {
      out.occlusions.push_back({shadow->occluder_id, shadow->vertices});
      result.shadows.push_back(std::move(*shadow));
    }
  }
  for (const auto& agent : out.agents) {
    if (agent.id != out.ego_id && !agent.states[pred].observed) result.occluded_agent_ids.push_back(agent.id);
  }
  return result;
}

std::size_t AnchorSet::count(AnchorSource source) const {
  return static_cast<std::size_t>(
      std::count_if(anchors.begin(), anchors.end(), [&](const Anchor& a) { return a.source == source; }));
}

std::vector<Vec2> future_positions(const Scene& scene, const AgentTrack& agent) {
  std::vector<Vec2> future;
  future.reserve(static_cast<std::size_t>(scene.P));
  for (int t = scene.H; t < scene.total_steps(); ++t) future.push_back(agent.states[static_cast<std::size_t>(t)].position());
  return future;
}

namespace {

void add_observed_agent_anchors(const Scene& scene, AnchorSet& set) {
  const auto pred = static_cast<std::size_t>(scene.prediction_step());
  for (const auto& agent : scene.agents) {
    if (!agent.states[pred].observed) continue;
    set.anchors.push_back(
        {agent.states[pred].position(), AnchorSource::kObservedAgent, agent.id, true, agent.id,
         future_positions(scene, agent)});
  }
}

}  // namespace

AnchorSet build_anchor_set(const Scene& scene, const std::vector<ShadowPolygon>& shadows,
                           const std::string& occluder_id, int n_occ_anchors, std::uint64_t seed) {
  const ShadowPolygon* shadow = nullptr;
  for (const auto& s : shadows) {
    if (s.occluder_id == occluder_id) shadow = &s;
  }
  if (shadow == nullptr || shadow->vertices.size() < 3) {
    throw Error(ErrorCode::kEmptyShadow, "occluder '" + occluder_id + "' has no shadow polygon");
  }
  if (n_occ_anchors < 0) throw Error(ErrorCode::kInvalidArgument, "n_occ_anchors must be non-negative");

  AnchorSet set;
  add_observed_agent_anchors(scene, set);

  const auto pred = static_cast<std::size_t>(scene.prediction_step());
  std::vector<const AgentTrack*> hidden;
  for (const auto& agent : scene.agents) {
    if (agent.id != scene.ego_id && !agent.states[pred].observed) hidden.push_back(&agent);
  }

  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  for (const Vec2 v : shadow->vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }

  Rng rng(seed);
  const long long budget = 1000LL * n_occ_anchors;
  long long proposals = 0;
  for (int k = 0; k < n_occ_anchors; ++k) {
    Vec2 q;
    do {
      if (proposals++ >= budget) {
        throw Error(ErrorCode::kDegenerateShadow, "rejection sampling exhausted for occluder '" + occluder_id + "'");
      }
      q = {rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
    } while (!point_in_polygon(shadow->vertices, q));

    Anchor anchor{q, AnchorSource::kOcclusion, occluder_id, false, std::nullopt, {}};
    double best = std::numeric_limits<double>::infinity();
    for (const AgentTrack* agent : hidden) {
      if (!agent->footprint(pred).contains(q)) continue;
      const double d = distance(q, agent->states[pred].position());
      if (d < best) {
        best = d;
        anchor.gt_occupied = true;
        anchor.gt_agent_id = agent->id;
        anchor.gt_future = future_positions(scene, *agent);
      }
    }
    set.anchors.push_back(std::move(anchor));
  }
  return set;
}

AnchorSet build_occluded_query_set(const Scene& scene, const std::vector<std::string>& occluded_agent_ids) {
  AnchorSet set;
  add_observed_agent_anchors(scene, set);
  const auto pred = static_cast<std::size_t>(scene.prediction_step());
  for (const auto& id : occluded_agent_ids) {
    const AgentTrack* agent = scene.find_agent(id);
    if (agent == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown occluded agent '" + id + "'");
    set.anchors.push_back({agent->states[pred].position(), AnchorSource::kOccludedAgent, id, true, id,
                           future_positions(scene, *agent)});
  }
  return set;
}

std::vector<AnchorRecord> to_records(const AnchorSet& set) {
  std::vector<AnchorRecord> out;
  for (const auto& a : set.anchors) {
    std::string prefix = a.source == AnchorSource::kObservedAgent   ? "observed_agent:"
                         : a.source == AnchorSource::kOcclusion     ? "occlusion:"
                                                                    : "occluded_agent:";
    out.push_back({a.position.x, a.position.y, prefix + a.source_id, a.gt_occupied, a.gt_agent_id});
  }
  return out;
}

}  // namespace scene_informer
