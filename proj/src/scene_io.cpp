#include "scene_informer/scene_io.hpp"

#include <fstream>
#include <sstream>

#include "scene_informer/error.hpp"

namespace scene_informer {

using nlohmann::json;

namespace {

json point_list(const std::vector<Vec2>& points) {
  json out = json::array();
  for (const Vec2 p : points) out.push_back({p.x, p.y});
  return out;
}

// Field access with path-qualified schema errors.
class Reader {
 public:
  explicit Reader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(ErrorCode::kSchema, "line " + std::to_string(line_) + ": " + path + ": " + what);
  }

  const json& field(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(join(path, key), "missing");
    return *it;
  }

  double number(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = field(obj, key, path);
    if (!v.is_number()) fail(join(path, key), "expected number");
    return v.get<double>();
  }

  int integer(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = field(obj, key, path);
    if (!v.is_number_integer()) fail(join(path, key), "expected integer");
    return v.get<int>();
  }

  std::string string(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = field(obj, key, path);
    if (!v.is_string()) fail(join(path, key), "expected string");
    return v.get<std::string>();
  }

  bool boolean(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = field(obj, key, path);
    if (!v.is_boolean()) fail(join(path, key), "expected boolean");
    return v.get<bool>();
  }

  const json& array(const json& obj, const std::string& key, const std::string& path) const {
    const json& v = field(obj, key, path);
    if (!v.is_array()) fail(join(path, key), "expected array");
    return v;
  }

  std::vector<Vec2> points(const json& arr, const std::string& path) const {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const json& p = arr[i];
      const std::string where = path + "[" + std::to_string(i) + "]";
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) fail(where, "expected [x, y]");
      out.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string index(const std::string& path, const std::string& key, std::size_t i) {
    return join(path, key) + "[" + std::to_string(i) + "]";
  }

 private:
  std::size_t line_;
};

}  // namespace

json scene_to_json(const Scene& scene) {
  json agents = json::array();
  for (const auto& a : scene.agents) {
    json states = json::array();
    for (const auto& s : a.states) {
      states.push_back({{"t", s.t},
                        {"x", s.x},
                        {"y", s.y},
                        {"heading", s.heading},
                        {"vx", s.vx},
                        {"vy", s.vy},
                        {"observed", s.observed}});
    }
    agents.push_back({{"id", a.id},
                      {"kind", to_string(a.kind)},
                      {"length", a.length},
                      {"width", a.width},
                      {"states", std::move(states)}});
  }
  json map = json::array();
  for (const auto& line : scene.map) {
    map.push_back({{"kind", to_string(line.kind)}, {"points", point_list(line.points)}});
  }
  json j = {{"scene_id", scene.scene_id}, {"dt", scene.dt},         {"H", scene.H},
            {"P", scene.P},               {"ego_id", scene.ego_id}, {"radius", scene.radius},
            {"agents", std::move(agents)}, {"map", std::move(map)}};
  if (!scene.occlusions.empty()) {
    json occ = json::array();
    for (const auto& o : scene.occlusions) {
      occ.push_back({{"occluder_id", o.occluder_id}, {"polygon", point_list(o.polygon)}});
    }
    j["occlusions"] = std::move(occ);
  }
  if (!scene.anchors.empty()) {
    json anchors = json::array();
    for (const auto& a : scene.anchors) {
      json rec = {{"x", a.x}, {"y", a.y}, {"source", a.source}, {"gt_occupied", a.gt_occupied}};
      if (a.gt_agent_id) rec["gt_agent_id"] = *a.gt_agent_id;
      anchors.push_back(std::move(rec));
    }
    j["anchors"] = std::move(anchors);
  }
  return j;
}

Scene scene_from_json(const json& j, std::size_t line) {
  const Reader r(line);
  if (!j.is_object()) r.fail("<root>", "expected object");
  Scene scene;
  scene.scene_id = r.string(j, "scene_id", "");
  scene.dt = r.number(j, "dt", "");
  scene.H = r.integer(j, "H", "");
  scene.P = r.integer(j, "P", "");
  scene.ego_id = r.string(j, "ego_id", "");
  scene.radius = r.number(j, "radius", "");

  const json& agents = r.array(j, "agents", "");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = Reader::index("", "agents", i);
    const json& a = agents[i];
    AgentTrack track;
    track.id = r.string(a, "id", path);
    const std::string kind = r.string(a, "kind", path);
    const auto parsed = parse_agent_kind(kind);
    if (!parsed) r.fail(Reader::join(path, "kind"), "unknown agent kind '" + kind + "'");
    track.kind = *parsed;
    track.length = r.number(a, "length", path);
    track.width = r.number(a, "width", path);
    const json& states = r.array(a, "states", path);
    for (std::size_t k = 0; k < states.size(); ++k) {
      const std::string spath = Reader::index(path, "states", k);
      const json& s = states[k];
      track.states.push_back({r.integer(s, "t", spath), r.number(s, "x", spath), r.number(s, "y", spath),
                              r.number(s, "heading", spath), r.number(s, "vx", spath), r.number(s, "vy", spath),
                              r.boolean(s, "observed", spath)});
    }
    scene.agents.push_back(std::move(track));
  }

  const json& map = r.array(j, "map", "");
  for (std::size_t i = 0; i < map.size(); ++i) {
    const std::string path = Reader::index("", "map", i);
    Polyline line;
    line.kind = parse_polyline_kind(r.string(map[i], "kind", path));
    line.points = r.points(r.array(map[i], "points", path), Reader::join(path, "points"));
    scene.map.push_back(std::move(line));
  }

  if (j.contains("occlusions")) {
    const json& occ = r.array(j, "occlusions", "");
    for (std::size_t i = 0; i < occ.size(); ++i) {
      const std::string path = Reader::index("", "occlusions", i);
      scene.occlusions.push_back({r.string(occ[i], "occluder_id", path),
                                  r.points(r.array(occ[i], "polygon", path), Reader::join(path, "polygon"))});
    }
  }
  if (j.contains("anchors")) {
    const json& anchors = r.array(j, "anchors", "");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const std::string path = Reader::index("", "anchors", i);
      const json& a = anchors[i];
      AnchorRecord rec{r.number(a, "x", path), r.number(a, "y", path), r.string(a, "source", path),
                       r.boolean(a, "gt_occupied", path), std::nullopt};
      if (a.contains("gt_agent_id")) rec.gt_agent_id = r.string(a, "gt_agent_id", path);
      scene.anchors.push_back(std::move(rec));
    }
  }

  try {
    validate_scene(scene);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": " + e.what());
  }
  return scene;
}

std::string serialize_scene(const Scene& scene) { return scene_to_json(scene).dump(); }

void write_scenes(const std::filesystem::path& path, const std::vector<Scene>& scenes, const json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  if (!meta.is_null()) out << json{{"_meta", meta}}.dump() << '\n';
  for (const auto& scene : scenes) out << serialize_scene(scene) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

std::vector<Scene> parse_scenes(std::istream& in) {
  std::vector<Scene> scenes;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kSchema, "line " + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    if (j.is_object() && j.contains("_meta")) continue;
    scenes.push_back(scene_from_json(j, line));
  }
  return scenes;
}

std::vector<Scene> read_scenes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return parse_scenes(in);
}

}  // namespace scene_informer
