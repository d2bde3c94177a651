#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scene_informer/scene.hpp"

namespace scene_informer {

// Line format: one JSON object per scene. Lines holding a "_meta" key carry
// provenance (tool version, config echo) and are skipped by the reader.
nlohmann::json scene_to_json(const Scene& scene);

// Throws Error(kSchema) naming the offending field path. `line` is only used
// to prefix messages.
Scene scene_from_json(const nlohmann::json& j, std::size_t line = 0);

std::string serialize_scene(const Scene& scene);

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes,
                  const nlohmann::json& meta = nullptr);
std::vector<Scene> read_scenes(const std::filesystem::path& path);
std::vector<Scene> parse_scenes(std::istream& in);

}  // namespace scene_informer
