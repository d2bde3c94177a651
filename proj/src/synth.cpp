#include "scene_informer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "scene_informer/error.hpp"
#include "scene_informer/rng.hpp"

namespace scene_informer {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kArmLength = 150.0;
constexpr double kPathSpacing = 0.25;
constexpr double kMapSpacing = 0.5;
constexpr double kBoxMargin = 6.0;       // intersection half-size beyond the outer lane edge
constexpr double kCrosswalkWidth = 4.0;
constexpr double kSpawnRadius = 50.0;    // agents start within this distance of the ego
constexpr int kSpawnAttempts = 200;
constexpr double kMaxHeadingRate = 0.15;  // rad per step; stays below the 0.2 plausibility bound

// Arc-length parameterized polyline, extrapolated linearly past its ends.
class Path {
 public:
  explicit Path(std::vector<Vec2> points) : points_(std::move(points)) {
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      cumulative_.push_back(cumulative_.back() + distance(points_[i - 1], points_[i]));
    }
  }

  double length() const { return cumulative_.back(); }

  Vec2 position(double s) const {
    const std::size_t i = segment(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double u = (s - cumulative_[i]) / seg;
    return points_[i] + u * (points_[i + 1] - points_[i]);
  }

  double heading(double s) const {
    const std::size_t i = segment(s);
    const Vec2 d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
  }

  // Arc position of the path point closest to `p`.
  double project(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double d = distance(points_[i], p);
      if (d < best) {
        best = d;
        best_s = cumulative_[i];
      }
    }
    return best_s;
  }

 private:
  std::size_t segment(double s) const {
    if (s <= 0.0) return 0;
    if (s >= length()) return points_.size() - 2;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    return static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
  }

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

// Dense point builder for straight runs and circular arcs.
class PointBuilder {
 public:
  explicit PointBuilder(double spacing) : spacing_(spacing) {}

  PointBuilder& line(Vec2 a, Vec2 b) {
    const int n = std::max(1, static_cast<int>(std::ceil(distance(a, b) / spacing_)));
    for (int k = 0; k <= n; ++k) push(a + (static_cast<double>(k) / n) * (b - a));
    return *this;
  }

  PointBuilder& arc(Vec2 center, double radius, double from, double to) {
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(to - from) * radius / spacing_)));
    for (int k = 0; k <= n; ++k) {
      push(center + radius * unit_vector(from + (to - from) * static_cast<double>(k) / n));
    }
    return *this;
  }

  std::vector<Vec2> take() { return std::move(points_); }

 private:
  void push(Vec2 p) {
    if (points_.empty() || distance(points_.back(), p) > 1e-9) points_.push_back(p);
  }

  double spacing_;
  std::vector<Vec2> points_;
};

std::vector<Vec2> rotated(std::vector<Vec2> pts, double angle) {
  for (auto& p : pts) p = rotate(p, angle);
  return pts;
}

struct Route {
  Path path;
  int arm = 0;                 // approach arm whose crosswalk the route crosses first
  std::optional<double> stop_s;  // stop line arc position, when the route approaches a crosswalk
  double max_speed = std::numeric_limits<double>::infinity();
  int lane = 0;
};

struct Crosswalk {
  std::vector<int> arms;  // approach arms whose vehicles stop for it
  Vec2 from;  // walking line across the road
  Vec2 to;
  std::vector<Vec2> outline;
};

struct Layout {
  std::vector<Route> vehicle_routes;
  std::vector<int> outer_routes;  // indices usable by cyclists
  std::vector<int> straight_routes;
  std::vector<int> turn_routes;
  std::vector<Crosswalk> crosswalks;
  std::vector<Polyline> map;
};

void add_map_line(Layout& layout, PolylineKind kind, std::vector<Vec2> pts) {
  layout.map.push_back({kind, std::move(pts)});
}

void index_routes(Layout& layout) {
  for (std::size_t i = 0; i < layout.vehicle_routes.size(); ++i) {
    auto& list = std::isfinite(layout.vehicle_routes[i].max_speed) ? layout.turn_routes : layout.straight_routes;
    list.push_back(static_cast<int>(i));
  }
}

Layout straight_road_layout(const ScenarioTemplate& t) {
  Layout layout;
  const int n = t.lane_count;
  const double w = t.lane_width;
  const double half_road = n * w;
  for (int dir = 0; dir < 2; ++dir) {
    const double angle = dir == 0 ? 0.0 : kPi;
    for (int i = 0; i < n; ++i) {
      const double a = (i + 0.5) * w;
      auto pts = rotated(PointBuilder(kPathSpacing).line({-kArmLength, -a}, {kArmLength, -a}).take(), angle);
      Route route{Path(pts), dir * 2, std::nullopt, std::numeric_limits<double>::infinity(), i};
      if (t.crosswalk) route.stop_s = kArmLength - (0.5 * kCrosswalkWidth + 1.5);
      layout.vehicle_routes.push_back(std::move(route));
      if (i == n - 1) layout.outer_routes.push_back(static_cast<int>(layout.vehicle_routes.size()) - 1);
      add_map_line(layout, PolylineKind::kLaneCenter,
                   rotated(PointBuilder(kMapSpacing).line({-kArmLength, -a}, {kArmLength, -a}).take(), angle));
    }
    for (int j = 1; j < n; ++j) {
      add_map_line(layout, PolylineKind::kLaneBoundary,
                   rotated(PointBuilder(kMapSpacing).line({-kArmLength, -j * w}, {kArmLength, -j * w}).take(), angle));
    }
    add_map_line(layout, PolylineKind::kRoadEdge,
                 rotated(PointBuilder(kMapSpacing).line({-kArmLength, -half_road}, {kArmLength, -half_road}).take(),
                         angle));
    if (t.crosswalk) {
      add_map_line(layout, PolylineKind::kStopSign, {rotate(Vec2{-(0.5 * kCrosswalkWidth + 1.5), -(half_road + 1.0)}, angle)});
    }
  }
  add_map_line(layout, PolylineKind::kLaneBoundary,
               PointBuilder(kMapSpacing).line({-kArmLength, 0.0}, {kArmLength, 0.0}).take());
  if (t.crosswalk) {
    const double c = 0.5 * kCrosswalkWidth;
    const double e = half_road + 1.0;
    Crosswalk cw{{0, 2}, {0.0, -(half_road + 3.0)}, {0.0, half_road + 3.0}, {}};
    cw.outline = PointBuilder(kMapSpacing).line({-c, -e}, {c, -e}).line({c, -e}, {c, e}).line({c, e}, {-c, e}).line({-c, e}, {-c, -e}).take();
    add_map_line(layout, PolylineKind::kCrosswalk, cw.outline);
    layout.crosswalks.push_back(std::move(cw));
  }
  index_routes(layout);
  return layout;
}

Layout intersection_layout(const ScenarioTemplate& t) {
  Layout layout;
  const int n = t.lane_count;
  const double w = t.lane_width;
  const double half_road = n * w;
  const double h = half_road + kBoxMargin;
  const double cw_center = h + 0.5 + 0.5 * kCrosswalkWidth;
  const double stop_x = h + 1.0 + kCrosswalkWidth + 1.0;

  for (int k = 0; k < 4; ++k) {
    const double angle = k * kPi / 2.0;
    for (int i = 0; i < n; ++i) {
      const double a = (i + 0.5) * w;
      std::vector<std::pair<std::vector<Vec2>, double>> shapes;  // points, curvature radius
      shapes.push_back({PointBuilder(kPathSpacing).line({-kArmLength, -a}, {kArmLength, -a}).take(),
                        std::numeric_limits<double>::infinity()});
      if (i == n - 1) {
        const double r = h - a;
        shapes.push_back({PointBuilder(kPathSpacing)
                              .line({-kArmLength, -a}, {-h, -a})
                              .arc({-h, -h}, r, kPi / 2.0, 0.0)
                              .line({-a, -h}, {-a, -kArmLength})
                              .take(),
                          r});
      }
      if (i == 0) {
        const double r = h + a;
        shapes.push_back({PointBuilder(kPathSpacing)
                              .line({-kArmLength, -a}, {-h, -a})
                              .arc({-h, h}, r, -kPi / 2.0, 0.0)
                              .line({a, h}, {a, kArmLength})
                              .take(),
                          r});
      }
      for (auto& [pts, r] : shapes) {
        Route route{Path(rotated(std::move(pts), angle)), k, std::nullopt, kMaxHeadingRate * r / t.dt, i};
        if (t.crosswalk) route.stop_s = kArmLength - stop_x;
        layout.vehicle_routes.push_back(std::move(route));
        if (i == n - 1) layout.outer_routes.push_back(static_cast<int>(layout.vehicle_routes.size()) - 1);
      }

      // Map: approach, exit, and connectors for this lane.
      add_map_line(layout, PolylineKind::kLaneCenter,
                   rotated(PointBuilder(kMapSpacing).line({-kArmLength, -a}, {-h, -a}).take(), angle));
      add_map_line(layout, PolylineKind::kLaneCenter,
                   rotated(PointBuilder(kMapSpacing).line({h, -a}, {kArmLength, -a}).take(), angle));
      add_map_line(layout, PolylineKind::kLaneCenter,
                   rotated(PointBuilder(kMapSpacing).line({-h, -a}, {h, -a}).take(), angle));
      if (i == n - 1) {
        add_map_line(layout, PolylineKind::kLaneCenter,
                     rotated(PointBuilder(kMapSpacing).arc({-h, -h}, h - a, kPi / 2.0, 0.0).take(), angle));
      }
      if (i == 0) {
        add_map_line(layout, PolylineKind::kLaneCenter,
                     rotated(PointBuilder(kMapSpacing).arc({-h, h}, h + a, -kPi / 2.0, 0.0).take(), angle));
      }
    }
    // Arm k lies on the approach side (negative x in the canonical frame).
    add_map_line(layout, PolylineKind::kLaneBoundary,
                 rotated(PointBuilder(kMapSpacing).line({-kArmLength, 0.0}, {-h, 0.0}).take(), angle));
    for (int j = 1; j < n; ++j) {
      for (const double side : {-1.0, 1.0}) {
        add_map_line(layout, PolylineKind::kLaneBoundary,
                     rotated(PointBuilder(kMapSpacing).line({-kArmLength, side * j * w}, {-h, side * j * w}).take(),
                             angle));
      }
    }
    for (const double side : {-1.0, 1.0}) {
      add_map_line(layout, PolylineKind::kRoadEdge,
                   rotated(PointBuilder(kMapSpacing).line({-kArmLength, side * half_road}, {-h, side * half_road}).take(),
                           angle));
    }
    if (t.crosswalk) {
      const double c0 = cw_center - 0.5 * kCrosswalkWidth;
      const double c1 = cw_center + 0.5 * kCrosswalkWidth;
      const double e = half_road + 1.0;
      Crosswalk cw{{k}, rotate(Vec2{-cw_center, -(half_road + 3.0)}, angle), rotate(Vec2{-cw_center, half_road + 3.0}, angle),
                   rotated(PointBuilder(kMapSpacing)
                               .line({-c0, -e}, {-c1, -e})
                               .line({-c1, -e}, {-c1, e})
                               .line({-c1, e}, {-c0, e})
                               .line({-c0, e}, {-c0, -e})
                               .take(),
                           angle)};
      add_map_line(layout, PolylineKind::kCrosswalk, cw.outline);
      layout.crosswalks.push_back(std::move(cw));
      add_map_line(layout, PolylineKind::kStopSign, {rotate(Vec2{-stop_x, -(half_road + 1.0)}, angle)});
    }
  }
  index_routes(layout);
  return layout;
}

// Scalar motion along a route: arc position and speed at time tau relative to
// the prediction time.
struct Motion {
  double s_pred = 0.0;
  double speed = 0.0;
  bool yields = false;
  double brake_tau = 0.0;
  double decel = 0.0;
  double brake_s = 0.0;

  std::pair<double, double> at(double tau) const {
    if (!yields || tau < brake_tau) {
      if (!yields) return {s_pred + speed * tau, speed};
      return {brake_s - speed * (brake_tau - tau), speed};
    }
    const double u = std::min(tau - brake_tau, speed / decel);
    return {brake_s + speed * u - 0.5 * decel * u * u, speed - decel * u};
  }
};

std::vector<AgentState> sample_route(const Path& path, const Motion& motion, const ScenarioTemplate& t) {
  std::vector<AgentState> states;
  const int total = t.H + t.P;
  for (int step = 0; step < total; ++step) {
    const double tau = (step - (t.H - 1)) * t.dt;
    const auto [s, v] = motion.at(tau);
    const Vec2 p = path.position(s);
    const double heading = wrap_angle(path.heading(s));
    const Vec2 vel = v * unit_vector(heading);
    states.push_back({step, p.x, p.y, heading, vel.x, vel.y, true});
  }
  return states;
}

std::vector<AgentState> sample_line(Vec2 from, Vec2 to, double s_pred, double speed, const ScenarioTemplate& t) {
  const Vec2 dir = (1.0 / distance(from, to)) * (to - from);
  const double heading = wrap_angle(std::atan2(dir.y, dir.x));
  std::vector<AgentState> states;
  for (int step = 0; step < t.H + t.P; ++step) {
    const double tau = (step - (t.H - 1)) * t.dt;
    const Vec2 p = from + (s_pred + speed * tau) * dir;
    states.push_back({step, p.x, p.y, heading, speed * dir.x, speed * dir.y, true});
  }
  return states;
}

bool collides(const AgentTrack& candidate, const std::vector<AgentTrack>& placed) {
  for (const auto& other : placed) {
    for (std::size_t step = 0; step < candidate.states.size(); ++step) {
      if (boxes_overlap(candidate.footprint(step), other.footprint(step))) return true;
    }
  }
  return false;
}

class SceneBuilder {
 public:
  SceneBuilder(const ScenarioTemplate& tmpl, std::uint64_t seed)
      : t_(tmpl), rng_(mix_seed(seed, 0x5ce7e)), layout_(tmpl.kind == ScenarioKind::kStraightRoad
                                                             ? straight_road_layout(tmpl)
                                                             : intersection_layout(tmpl)) {
    scene_.scene_id = to_string(tmpl.kind) + "-" + std::to_string(seed);
    scene_.dt = tmpl.dt;
    scene_.H = tmpl.H;
    scene_.P = tmpl.P;
    scene_.radius = tmpl.radius;
    scene_.ego_id = "ego";
    scene_.map = layout_.map;
  }

  Scene build() {
    place_ego();
    const int peds = rng_.uniform_int(t_.pedestrian_count.lo, t_.pedestrian_count.hi);
    const int vehicles = rng_.uniform_int(t_.vehicle_count.lo, t_.vehicle_count.hi);
    const int cyclists = rng_.uniform_int(t_.cyclist_count.lo, t_.cyclist_count.hi);
    place_many("pedestrian", peds, t_.pedestrian_count.lo, [&](int id) { return try_pedestrian(id); });
    place_many("vehicle", vehicles, t_.vehicle_count.lo, [&](int id) { return try_vehicle(id, AgentKind::kVehicle); });
    place_many("cyclist", cyclists, t_.cyclist_count.lo, [&](int id) { return try_vehicle(id, AgentKind::kCyclist); });
    return std::move(scene_);
  }

 private:
  template <typename Attempt>
  void place_many(const char* what, int count, int minimum, Attempt attempt) {
    int placed = 0;
    for (int k = 0; k < count; ++k) {
      bool ok = false;
      for (int tries = 0; tries < kSpawnAttempts && !ok; ++tries) ok = attempt(placed + 1);
      if (ok) {
        ++placed;
      } else if (placed < minimum) {
        throw Error(ErrorCode::kSpawnExhausted, std::string("could not place ") + what + " " +
                                                    std::to_string(placed + 1) + " in scene '" + scene_.scene_id + "'");
      }
    }
  }

  void place_ego() {
    const auto& route = layout_.vehicle_routes[rng_.uniform_int(layout_.vehicle_routes.size())];
    const double stop = route.stop_s.value_or(kArmLength - 8.0);
    Motion m;
    m.s_pred = rng_.uniform(stop - 35.0, stop + 8.0);
    m.speed = std::min(rng_.uniform(t_.ego_speed.lo, t_.ego_speed.hi), route.max_speed);
    AgentTrack ego{"ego", AgentKind::kVehicle, 4.5, 2.0, sample_route(route.path, m, t_)};
    ego_pred_ = ego.states[static_cast<std::size_t>(t_.H - 1)].position();
    scene_.agents.push_back(std::move(ego));
  }

  bool accept(AgentTrack track) {
    if (distance(track.states[static_cast<std::size_t>(t_.H - 1)].position(), ego_pred_) > kSpawnRadius) return false;
    if (collides(track, scene_.agents)) return false;
    scene_.agents.push_back(std::move(track));
    return true;
  }

  bool try_pedestrian(int id) {
    if (layout_.crosswalks.empty()) return false;
    const auto& cw = layout_.crosswalks[rng_.uniform_int(layout_.crosswalks.size())];
    const bool forward = rng_.bernoulli(0.5);
    const Vec2 from = forward ? cw.from : cw.to;
    const Vec2 to = forward ? cw.to : cw.from;
    const double len = distance(from, to);
    const double speed = rng_.uniform(t_.pedestrian_speed.lo, t_.pedestrian_speed.hi);
    // Keep the pedestrian on the crosswalk at prediction time.
    const double s_pred = rng_.uniform(1.0, len - 1.0);
    AgentTrack ped{"ped_" + std::to_string(id), AgentKind::kPedestrian, 0.8, 0.8, sample_line(from, to, s_pred, speed, t_)};
    if (!accept(std::move(ped))) return false;
    busy_arms_.insert(busy_arms_.end(), cw.arms.begin(), cw.arms.end());
    return true;
  }

  bool try_vehicle(int id, AgentKind kind) {
    const bool cyclist = kind == AgentKind::kCyclist;
    const std::vector<int>* choices = &layout_.outer_routes;
    if (!cyclist) {
      const bool turn = !layout_.turn_routes.empty() && rng_.bernoulli(t_.turn_probability);
      choices = turn ? &layout_.turn_routes : &layout_.straight_routes;
    }
    const Route& route =
        layout_.vehicle_routes[static_cast<std::size_t>((*choices)[rng_.uniform_int(choices->size())])];

    const RealRange speeds = cyclist ? t_.cyclist_speed : t_.vehicle_speed;
    Motion m;
    m.speed = std::min(rng_.uniform(speeds.lo, speeds.hi), route.max_speed);
    const bool crosswalk_busy =
        route.stop_s && std::find(busy_arms_.begin(), busy_arms_.end(), route.arm) != busy_arms_.end();
    if (!cyclist && crosswalk_busy && rng_.bernoulli(t_.yield_probability)) {
      m.yields = true;
      m.decel = rng_.uniform(1.5, 4.0);
      m.brake_tau = rng_.uniform(-2.0, 3.5);
      m.brake_s = *route.stop_s - m.speed * m.speed / (2.0 * m.decel);
      m.s_pred = m.at(0.0).first;
    } else {
      const double near = route.path.project(ego_pred_);
      m.s_pred = rng_.uniform(near - kSpawnRadius, near + kSpawnRadius);
    }
    AgentTrack track{(cyclist ? "cyc_" : "veh_") + std::to_string(id), kind, cyclist ? 1.8 : 4.5,
                     cyclist ? 0.6 : 2.0, sample_route(route.path, m, t_)};
    return accept(std::move(track));
  }

  const ScenarioTemplate& t_;
  Rng rng_;
  Layout layout_;
  Scene scene_;
  Vec2 ego_pred_;
  std::vector<int> busy_arms_;
};

// Typed accessors with key-path errors for the template file.
class TemplateReader {
 public:
  explicit TemplateReader(const json& j) : j_(j) {}

  void check_keys(std::initializer_list<const char*> known) const {
    if (!j_.is_object()) throw Error(ErrorCode::kConfig, "template: expected a JSON object");
    for (const auto& [key, _] : j_.items()) {
      if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
        throw Error(ErrorCode::kConfig, "template." + key + ": unknown key");
      }
    }
  }

  template <typename T>
  void read(const char* key, T& out) const {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, IntRange> || std::is_same_v<T, RealRange>) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) throw 0;
        if constexpr (std::is_same_v<T, IntRange>) {
          if (!v[0].is_number_integer() || !v[1].is_number_integer()) throw 0;
          out = {v[0].get<int>(), v[1].get<int>()};
        } else {
          out = {v[0].get<double>(), v[1].get<double>()};
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw 0;
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw 0;
        out = v.get<T>();
      } else {
        if (!v.is_number()) throw 0;
        out = v.get<T>();
      }
    } catch (int) {
      throw Error(ErrorCode::kConfig, std::string("template.") + key + ": wrong type");
    }
  }

 private:
  const json& j_;
};

}  // namespace

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::kStraightRoad ? "straight_road" : "four_way_intersection";
}

void validate_template(const ScenarioTemplate& t) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, "template." + what); };
  if (t.lane_count < 1) fail("lane_count: must be >= 1");
  if (!(t.lane_width > 2.5)) fail("lane_width: must exceed 2.5 m");
  for (const auto& [name, r] : {std::pair{"vehicle_count", t.vehicle_count}, std::pair{"pedestrian_count", t.pedestrian_count},
                                std::pair{"cyclist_count", t.cyclist_count}}) {
    if (r.lo < 0 || r.hi < r.lo) fail(std::string(name) + ": empty range");
  }
  for (const auto& [name, r] : {std::pair{"vehicle_speed", t.vehicle_speed}, std::pair{"pedestrian_speed", t.pedestrian_speed},
                                std::pair{"cyclist_speed", t.cyclist_speed}, std::pair{"ego_speed", t.ego_speed}}) {
    if (r.lo < 0.0 || r.hi < r.lo) fail(std::string(name) + ": invalid range");
  }
  if (t.pedestrian_count.lo > 0 && !t.crosswalk) fail("pedestrian_count: pedestrians need crosswalk = true");
  if (t.turn_probability < 0.0 || t.turn_probability > 1.0) fail("turn_probability: must lie in [0, 1]");
  if (t.yield_probability < 0.0 || t.yield_probability > 1.0) fail("yield_probability: must lie in [0, 1]");
  if (t.H < 1 || t.P < 1) fail("H/P: must be >= 1");
  if (!(t.dt > 0.0) || !(t.radius > 0.0)) fail("dt/radius: must be positive");
}

ScenarioTemplate template_from_json(const json& j) {
  TemplateReader r(j);
  r.check_keys({"kind", "lane_count", "lane_width", "crosswalk", "vehicle_count", "pedestrian_count", "cyclist_count",
                "vehicle_speed", "pedestrian_speed", "cyclist_speed", "ego_speed", "turn_probability",
                "yield_probability", "H", "P", "dt", "radius"});
  ScenarioTemplate t;
  if (j.contains("kind")) {
    const json& k = j.at("kind");
    if (k == "straight_road") {
      t.kind = ScenarioKind::kStraightRoad;
    } else if (k == "four_way_intersection") {
      t.kind = ScenarioKind::kFourWayIntersection;
    } else {
      throw Error(ErrorCode::kConfig, "template.kind: expected straight_road or four_way_intersection");
    }
  }
  r.read("lane_count", t.lane_count);
  r.read("lane_width", t.lane_width);
  r.read("crosswalk", t.crosswalk);
  r.read("vehicle_count", t.vehicle_count);
  r.read("pedestrian_count", t.pedestrian_count);
  r.read("cyclist_count", t.cyclist_count);
  r.read("vehicle_speed", t.vehicle_speed);
  r.read("pedestrian_speed", t.pedestrian_speed);
  r.read("cyclist_speed", t.cyclist_speed);
  r.read("ego_speed", t.ego_speed);
  r.read("turn_probability", t.turn_probability);
  r.read("yield_probability", t.yield_probability);
  r.read("H", t.H);
  r.read("P", t.P);
  r.read("dt", t.dt);
  r.read("radius", t.radius);
  validate_template(t);
  return t;
}

json template_to_json(const ScenarioTemplate& t) {
  auto range = [](auto r) { return json::array({r.lo, r.hi}); };
  return {{"kind", to_string(t.kind)},
          {"lane_count", t.lane_count},
          {"lane_width", t.lane_width},
          {"crosswalk", t.crosswalk},
          {"vehicle_count", range(t.vehicle_count)},
          {"pedestrian_count", range(t.pedestrian_count)},
          {"cyclist_count", range(t.cyclist_count)},
          {"vehicle_speed", range(t.vehicle_speed)},
          {"pedestrian_speed", range(t.pedestrian_speed)},
          {"cyclist_speed", range(t.cyclist_speed)},
          {"ego_speed", range(t.ego_speed)},
          {"turn_probability", t.turn_probability},
          {"yield_probability", t.yield_probability},
          {"H", t.H},
          {"P", t.P},
          {"dt", t.dt},
          {"radius", t.radius}};
}

Scene generate_scene(const ScenarioTemplate& tmpl, std::uint64_t seed) {
  validate_template(tmpl);
  return SceneBuilder(tmpl, seed).build();
}

}  // namespace scene_informer
