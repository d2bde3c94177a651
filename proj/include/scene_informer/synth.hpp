#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "scene_informer/scene.hpp"

namespace scene_informer {

enum class ScenarioKind { kStraightRoad, kFourWayIntersection };

struct IntRange {
  int lo = 0;
  int hi = 0;
};
struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct ScenarioTemplate {
  ScenarioKind kind = ScenarioKind::kFourWayIntersection;
  int lane_count = 1;  // lanes per travel direction
  double lane_width = 3.5;
  bool crosswalk = true;
  IntRange vehicle_count{6, 10};
  IntRange pedestrian_count{1, 3};
  IntRange cyclist_count{0, 1};
  RealRange vehicle_speed{4.0, 11.0};
  RealRange pedestrian_speed{1.0, 1.8};
  RealRange cyclist_speed{3.0, 6.0};
  RealRange ego_speed{0.0, 8.0};
  double turn_probability = 0.5;
  double yield_probability = 0.8;
  int H = 10;
  int P = 40;
  double dt = 0.1;
  double radius = 60.0;
};

// Throws Error(kConfig) on invariant violations.
void validate_template(const ScenarioTemplate& tmpl);

// Keys mirror the field names; ranges are [lo, hi] arrays. Unknown keys and
// wrong types are rejected with Error(kConfig) naming the key path.
ScenarioTemplate template_from_json(const nlohmann::json& j);
nlohmann::json template_to_json(const ScenarioTemplate& tmpl);

std::string to_string(ScenarioKind kind);

// Pure function of (template, seed). Scenes are in world coordinates; the
// scene id is "<kind>-<seed>". Throws Error(kSpawnExhausted) when the minimum
// agent counts cannot be placed without overlapping footprints.
Scene generate_scene(const ScenarioTemplate& tmpl, std::uint64_t seed);

// Dataset split seed ranges: train [0, 8000), val [8000, 9000), test [9000, 10000).
inline constexpr std::uint64_t kTrainSeedBegin = 0;
inline constexpr std::uint64_t kValSeedBegin = 8000;
inline constexpr std::uint64_t kTestSeedBegin = 9000;
inline constexpr std::uint64_t kSeedEnd = 10000;

}  // namespace scene_informer
