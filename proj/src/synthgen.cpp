#include "refmine/synthgen.hpp"

#include "refmine/dsl/interpreter.hpp"
#include "refmine/dsl/parser.hpp"
#include "refmine/dsl/registry.hpp"
#include "refmine/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace refmine::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLaneWidth = 3.5;

LaneSegment make_lane(std::string id, LaneType type, Polyline left, Polyline right,
                      std::vector<std::string> successors = {}, bool intersection = false) {
  LaneSegment l;
  l.id = std::move(id);
  l.lane_type = type;
  l.left_boundary = std::move(left);
  l.right_boundary = std::move(right);
  l.successors = std::move(successors);
  l.is_intersection = intersection;
  return l;
}

Polygon rect(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

HDMap straight_road() {
  const double w = kLaneWidth;
  std::vector<LaneSegment> lanes;
  auto east = [&](std::string id, double y_right, double x0, double x1, std::vector<std::string> succ, LaneType type) {
    lanes.push_back(make_lane(std::move(id), type, {{x0, y_right + w}, {x1, y_right + w}}, {{x0, y_right}, {x1, y_right}},
                              std::move(succ)));
  };
  east("L0", -w, -100, 150, {"L0x"}, LaneType::VEHICLE);
  east("L1", 0, -100, 150, {"L1x"}, LaneType::VEHICLE);
  east("L0x", -w, 150, 400, {}, LaneType::VEHICLE);
  east("L1x", 0, 150, 400, {}, LaneType::VEHICLE);
  lanes.push_back(make_lane("LB", LaneType::BIKE, {{-100, -w}, {400, -w}}, {{-100, -5}, {400, -5}}));
  // Westbound: left boundary is the road's center line.
  lanes.push_back(make_lane("L2", LaneType::VEHICLE, {{150, w}, {-100, w}}, {{150, 2 * w}, {-100, 2 * w}}));
  lanes.push_back(make_lane("L2x", LaneType::VEHICLE, {{400, w}, {150, w}}, {{400, 2 * w}, {150, 2 * w}}, {"L2"}));
  for (auto& l : lanes) {
    if (l.id == "L0") l.left_neighbor = "L1";
    if (l.id == "L1") l.right_neighbor = "L0";
    if (l.id == "L0x") l.left_neighbor = "L1x";
    if (l.id == "L1x") l.right_neighbor = "L0x";
  }
  std::vector<PedestrianCrossing> crossings{{"C0", rect(60, -5, 64, 2 * w)}};
  DrivableArea drivable{{rect(-100, -5, 400, 2 * w)}};
  return HDMap(std::move(lanes), std::move(crossings), {}, std::move(drivable));
}

/// Exact quarter-turn rotation about the origin.
Vec2 quarter(Vec2 p, int k) {
  switch (((k % 4) + 4) % 4) {
    case 1: return {-p.y, p.x};
    case 2: return {-p.x, -p.y};
    case 3: return {p.y, -p.x};
    default: return p;
  }
}

Polyline quarter(const Polyline& line, int k) {
  Polyline out;
  for (auto p : line) out.push_back(quarter(p, k));
  return out;
}

Polyline arc(Vec2 c, double r, double a0, double a1) {
  constexpr int kSteps = 24;
  Polyline out;
  for (int i = 0; i <= kSteps; ++i) {
    const double a = a0 + (a1 - a0) * i / kSteps;
    out.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return out;
}

HDMap intersection() {
  // Geometry is written for the south arm and rotated onto the others.
  const std::array<std::string, 4> arm = {"S", "E", "N", "W"};
  const double w = kLaneWidth;
  std::vector<LaneSegment> lanes;
  std::vector<PedestrianCrossing> crossings;
  std::vector<StopSign> signs;
  for (int k = 0; k < 4; ++k) {
    const std::string a = arm[static_cast<std::size_t>(k)];
    const std::string opposite = arm[static_cast<std::size_t>((k + 2) % 4)];
    const std::string right = arm[static_cast<std::size_t>((k + 1) % 4)];
    const std::string left = arm[static_cast<std::size_t>((k + 3) % 4)];
    auto add = [&](std::string id, const Polyline& l, const Polyline& r, std::vector<std::string> succ, bool x) {
      lanes.push_back(make_lane(std::move(id), LaneType::VEHICLE, quarter(l, k), quarter(r, k), std::move(succ), x));
    };
    add(a + "_in", {{0, -80}, {0, -10}}, {{w, -80}, {w, -10}}, {"X_" + a, "R_" + a, "L_" + a}, false);
    add(a + "_out", {{0, -10}, {0, -80}}, {{-w, -10}, {-w, -80}}, {}, false);
    add("X_" + a, {{0, -10}, {0, 10}}, {{w, -10}, {w, 10}}, {opposite + "_out"}, true);
    add("R_" + a, arc({10, -10}, 10, kPi, kPi / 2), arc({10, -10}, 10 - w, kPi, kPi / 2), {right + "_out"}, true);
    add("L_" + a, arc({-10, -10}, 10, 0, kPi / 2), arc({-10, -10}, 10 + w, 0, kPi / 2), {left + "_out"}, true);
    crossings.push_back({"C_" + a, quarter(rect(-5, -15, 5, -11), k)});
    signs.push_back({"SS_" + a, quarter(Vec2{5, -16.5}, k), -kPi / 2 + k * kPi / 2, {a + "_in"}});
  }
  // Bus lane to the right of the westbound approach's inbound lane.
  lanes.push_back(make_lane("W_bus", LaneType::BUS, {{-80, -w}, {-10, -w}}, {{-80, -2 * w}, {-10, -2 * w}}));
  for (auto& l : lanes) {
    if (l.id == "W_in") l.right_neighbor = "W_bus";
    if (l.id == "W_bus") l.left_neighbor = "W_in";
  }
  DrivableArea drivable{{rect(-80, -w, 80, w), rect(-w, -80, w, 80), rect(-10, -10, 10, 10), rect(-80, -2 * w, -10, -w)}};
  return HDMap(std::move(lanes), std::move(crossings), std::move(signs), std::move(drivable));
}

double num(const nlohmann::json& p, const char* key) {
  if (!p.contains(key) || !p.at(key).is_number()) {
    throw std::invalid_argument(std::string("motion parameter '") + key + "' missing or not a number");
  }
  return p.at(key).get<double>();
}

double num_or(const nlohmann::json& p, const char* key, double fallback) {
  return p.contains(key) ? num(p, key) : fallback;
}

std::string text(const nlohmann::json& p, const char* key) {
  if (!p.contains(key) || !p.at(key).is_string()) {
    throw std::invalid_argument(std::string("motion parameter '") + key + "' missing or not a string");
  }
  return p.at(key).get<std::string>();
}

/// Distance covered after t seconds; stops rather than reversing.
double travelled(double v, double a, double t) {
  if (a < 0.0 && v + a * t < 0.0) {
    const double stop = -v / a;
    return v * stop + 0.5 * a * stop * stop;
  }
  return v * t + 0.5 * a * t * t;
}

const LaneSegment& lane_or_throw(const HDMap& map, const std::string& id) {
  const auto* l = map.lane(id);
  if (l == nullptr) throw std::invalid_argument("unknown lane '" + id + "' in motion");
  return *l;
}

/// Centerline of a lane route: an explicit list, or the first-successor chain.
Polyline route_path(const HDMap& map, const nlohmann::json& p, const std::string& first) {
  std::vector<std::string> ids;
  if (p.contains("route")) {
    for (const auto& r : p.at("route")) ids.push_back(r.get<std::string>());
    if (ids.empty() || ids.front() != first) ids.insert(ids.begin(), first);
  } else {
    ids.push_back(first);
    while (ids.size() < 16) {
      const auto& l = lane_or_throw(map, ids.back());
      if (l.successors.empty()) break;
      ids.push_back(l.successors.front());
    }
  }
  Polyline path;
  for (const auto& id : ids) {
    const auto& c = lane_or_throw(map, id).centerline;
    for (const auto& q : c) {
      if (!path.empty() && (q - path.back()).norm() < 1e-9) continue;
      path.push_back(q);
    }
  }
  return path;
}

/// Point at arclength s, extrapolating past either end along the end segments.
Pose along(const Polyline& path, double s) {
  std::size_t i = 1;
  double walked = 0.0;
  if (s > 0.0) {
    for (; i + 1 < path.size(); ++i) {
      const double seg = (path[i] - path[i - 1]).norm();
      if (walked + seg >= s) break;
      walked += seg;
    }
  }
  const Vec2 a = path[i - 1];
  const Vec2 d = path[i] - a;
  const double len = d.norm();
  const Vec2 u = len > 0.0 ? d * (1.0 / len) : Vec2{1.0, 0.0};
  const Vec2 q = a + u * (s - walked);
  return {q.x, q.y, std::atan2(u.y, u.x)};
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

}  // namespace

const std::vector<std::string>& map_templates() {
  static const std::vector<std::string> names = {"straight_road", "intersection"};
  return names;
}

HDMap build_map(std::string_view template_id) {
  if (template_id == "straight_road") return straight_road();
  if (template_id == "intersection") return intersection();
  throw std::invalid_argument("unknown map template '" + std::string(template_id) + "'");
}

Pose Motion::at(double t, const HDMap& map) const {
  const auto& p = params;
  if (kind == "hold") return {num(p, "x"), num(p, "y"), normalize_angle(num_or(p, "yaw", 0.0))};
  if (kind == "line") {
    const double h = num(p, "heading");
    const double s = travelled(num(p, "speed"), num_or(p, "accel", 0.0), t);
    return {num(p, "x") + s * std::cos(h), num(p, "y") + s * std::sin(h), normalize_angle(h)};
  }
  if (kind == "arc") {
    const double r = num(p, "radius");
    const double w = num(p, "angular_speed");
    const double a = num(p, "start_angle") + w * t;
    const double yaw = a + (w < 0.0 ? -kPi / 2 : kPi / 2);
    return {num(p, "cx") + r * std::cos(a), num(p, "cy") + r * std::sin(a), normalize_angle(yaw)};
  }
  if (kind == "lane_follow") {
    const auto path = route_path(map, p, text(p, "lane"));
    auto pose = along(path, num(p, "s0") + travelled(num(p, "speed"), num_or(p, "accel", 0.0), t));
    pose.yaw = normalize_angle(pose.yaw);
    return pose;
  }
  if (kind == "lane_change") {
    const auto from = route_path(map, nlohmann::json::object(), text(p, "from_lane"));
    const auto to = route_path(map, nlohmann::json::object(), text(p, "to_lane"));
    const double v = num(p, "speed");
    const double s0 = num(p, "s0");
    const double t0 = num(p, "change_start");
    const double dur = num(p, "change_duration");
    auto pos = [&](double tt) {
      const Pose a = along(from, s0 + v * tt);
      const Pose b = along(to, s0 + v * tt);
      const double f = dur > 0.0 ? smoothstep((tt - t0) / dur) : (tt >= t0 ? 1.0 : 0.0);
      return Pose{a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f, a.yaw};
    };
    Pose here = pos(t);
    const Pose ahead = pos(t + 1e-3);
    const Pose behind = pos(t - 1e-3);
    if (std::hypot(ahead.x - behind.x, ahead.y - behind.y) > 1e-9) {
      here.yaw = std::atan2(ahead.y - behind.y, ahead.x - behind.x);
    }
    here.yaw = normalize_angle(here.yaw);
    return here;
  }
  if (kind == "crossing") {
    const Vec2 a{num(p, "x0"), num(p, "y0")};
    const Vec2 b{num(p, "x1"), num(p, "y1")};
    const double total = (b - a).norm();
    const Vec2 u = total > 0.0 ? (b - a) * (1.0 / total) : Vec2{1.0, 0.0};
    const double s = std::clamp(num(p, "speed") * (t - num_or(p, "start", 0.0)), 0.0, total);
    const Vec2 q = a + u * s;
    return {q.x, q.y, normalize_angle(std::atan2(u.y, u.x))};
  }
  throw std::invalid_argument("unknown motion primitive '" + kind + "'");
}

Vec3 default_size(Category c) {
  switch (c) {
    case Category::PEDESTRIAN:
    case Category::OFFICIAL_SIGNALER: return {0.6, 0.6, 1.7};
    case Category::BICYCLIST:
    case Category::BICYCLE: return {1.8, 0.6, 1.7};
    case Category::MOTORCYCLIST:
    case Category::MOTORCYCLE: return {2.1, 0.8, 1.5};
    case Category::BUS:
    case Category::SCHOOL_BUS: return {12.0, 2.6, 3.2};
    case Category::ARTICULATED_BUS: return {18.0, 2.6, 3.2};
    case Category::BOX_TRUCK:
    case Category::TRUCK: return {7.0, 2.4, 3.0};
    case Category::DOG:
    case Category::ANIMAL: return {0.9, 0.4, 0.6};
    case Category::CONSTRUCTION_CONE:
    case Category::BOLLARD: return {0.4, 0.4, 0.8};
    case Category::STROLLER:
    case Category::WHEELCHAIR: return {1.0, 0.7, 1.1};
    default: return {4.5, 1.9, 1.6};
  }
}

std::vector<Timestamp> scene_timestamps(const SceneScript& script) {
  const auto step = static_cast<Timestamp>(std::llround(1e9 / script.rate_hz));
  const auto count = static_cast<std::size_t>(std::floor(script.duration_s * script.rate_hz + 1e-9)) + 1;
  std::vector<Timestamp> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(kSceneEpoch + static_cast<Timestamp>(k) * step);
  return out;
}

void SceneScript::validate() const {
  if (log_id.empty() || log_id.find_first_of("/\\ ,") != std::string::npos) {
    throw std::invalid_argument("log_id must be a non-empty name without separators");
  }
  if (rate_hz != 2.0 && rate_hz != 10.0) throw std::invalid_argument("rate_hz must be 2 or 10");
  if (!(duration_s >= 5.0 && duration_s <= 20.0)) throw std::invalid_argument("duration_s must be in [5, 20]");
  if (!(jitter_m >= 0.0)) throw std::invalid_argument("jitter_m must be >= 0");
  const auto& names = map_templates();
  if (std::find(names.begin(), names.end(), map_template) == names.end()) {
    throw std::invalid_argument("unknown map template '" + map_template + "'");
  }
  const HDMap map = build_map(map_template);
  const double dt = 1.0 / rate_hz;
  auto check_motion = [&](const Motion& m, const std::string& who) {
    // Evaluating every sample surfaces bad primitives and parameters; speed is
    // checked by finite differences over the sample grid.
    Pose prev = m.at(0.0, map);
    for (double t = dt; t <= duration_s + 1e-9; t += dt) {
      const Pose cur = m.at(t, map);
      if (!std::isfinite(cur.x) || !std::isfinite(cur.y) || !std::isfinite(cur.yaw)) {
        throw std::invalid_argument(who + ": non-finite pose");
      }
      if (std::hypot(cur.x - prev.x, cur.y - prev.y) / dt > 30.0 + 1e-6) {
        throw std::invalid_argument(who + ": speed exceeds 30 m/s");
      }
      prev = cur;
    }
  };
  check_motion(ego, "ego");
  std::vector<std::string> ids;
  for (const auto& a : agents) {
    if (a.id.empty() || a.id == kEgoTrackId || a.id.find(',') != std::string::npos) {
      throw std::invalid_argument("invalid agent id '" + a.id + "'");
    }
    if (a.category == Category::EGO_VEHICLE) throw std::invalid_argument(a.id + ": EGO_VEHICLE is reserved");
    if (std::find(ids.begin(), ids.end(), a.id) != ids.end()) throw std::invalid_argument("duplicate agent " + a.id);
    ids.push_back(a.id);
    if (a.size && (a.size->x <= 0 || a.size->y <= 0 || a.size->z <= 0)) {
      throw std::invalid_argument(a.id + ": size must be positive");
    }
    if (!(a.start_s <= a.end_s)) throw std::invalid_argument(a.id + ": start_s after end_s");
    if (!(a.confidence >= 0.0)) throw std::invalid_argument(a.id + ": negative confidence");
    check_motion(a.motion, a.id);
  }
}

namespace {

nlohmann::json motion_json(const Motion& m) { return {{"kind", m.kind}, {"params", m.params}}; }

Motion motion_from(const nlohmann::json& j) {
  Motion m;
  m.kind = j.at("kind").get<std::string>();
  if (j.contains("params")) m.params = j.at("params");
  return m;
}

}  // namespace

nlohmann::json SceneScript::to_json() const {
  nlohmann::json doc;
  doc["log_id"] = log_id;
  doc["seed"] = seed;
  doc["duration_s"] = duration_s;
  doc["rate_hz"] = rate_hz;
  doc["map_template"] = map_template;
  doc["jitter_m"] = jitter_m;
  doc["ego"] = motion_json(ego);
  auto agents_json = nlohmann::json::array();
  for (const auto& a : agents) {
    nlohmann::json j;
    j["id"] = a.id;
    j["category"] = std::string(to_string(a.category));
    if (a.size) j["size"] = {a.size->x, a.size->y, a.size->z};
    j["motion"] = motion_json(a.motion);
    j["start_s"] = a.start_s;
    j["end_s"] = a.end_s;
    j["confidence"] = a.confidence;
    if (!a.color.empty()) j["color"] = a.color;
    agents_json.push_back(std::move(j));
  }
  doc["agents"] = std::move(agents_json);
  auto q = nlohmann::json::array();
  for (const auto& l : queries) q.push_back({{"id", l.id}, {"description", l.description}, {"source", l.source}});
  doc["queries"] = std::move(q);
  return doc;
}

SceneScript SceneScript::from_json(const nlohmann::json& doc) {
  try {
    SceneScript s;
    s.log_id = doc.at("log_id").get<std::string>();
    s.seed = doc.value("seed", std::uint64_t{0});
    s.duration_s = doc.at("duration_s").get<double>();
    s.rate_hz = doc.at("rate_hz").get<double>();
    s.map_template = doc.value("map_template", std::string("straight_road"));
    s.jitter_m = doc.value("jitter_m", 0.0);
    s.ego = motion_from(doc.at("ego"));
    for (const auto& j : doc.value("agents", nlohmann::json::array())) {
      AgentScript a;
      a.id = j.at("id").get<std::string>();
      const auto cat = j.at("category").get<std::string>();
      auto c = parse_category(cat);
      if (!c) throw std::invalid_argument("unknown category '" + cat + "'");
      a.category = *c;
      if (j.contains("size")) {
        const auto& z = j.at("size");
        a.size = Vec3{z.at(0).get<double>(), z.at(1).get<double>(), z.at(2).get<double>()};
      }
      a.motion = motion_from(j.at("motion"));
      a.start_s = j.value("start_s", 0.0);
      a.end_s = j.value("end_s", 1e9);
      a.confidence = j.value("confidence", 1.0);
      a.color = j.value("color", std::string());
      s.agents.push_back(std::move(a));
    }
    for (const auto& j : doc.value("queries", nlohmann::json::array())) {
      s.queries.push_back(
          {j.at("id").get<std::string>(), j.at("description").get<std::string>(), j.at("source").get<std::string>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed scene script: ") + e.what());
  }
}

SceneScript SceneScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

ScenarioSet oracle_evaluate(const dsl::Program& program, const LogBundle& bundle, const EngineConstants& constants) {
  OracleBackend oracle(bundle, constants);
  return dsl::execute_program(program, oracle).scenario;
}

GeneratedScene generate_scene(const SceneScript& script) {
  script.validate();
  const HDMap map = build_map(script.map_template);
  const auto stamps = scene_timestamps(script);
  std::mt19937_64 rng(script.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<EgoPose> poses;
  for (std::size_t k = 0; k < stamps.size(); ++k) {
    const Pose p = script.ego.at(to_seconds(stamps[k] - stamps.front()), map);
    poses.push_back(pose_from_yaw(stamps[k], {p.x, p.y, 0.0}, p.yaw));
  }

  auto agents = script.agents;
  std::sort(agents.begin(), agents.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::vector<Track> city;
  GeneratedScene scene;
  for (const auto& a : agents) {
    Track track;
    track.id = a.id;
    track.category = a.category;
    const Vec3 size = a.size.value_or(default_size(a.category));
    for (Timestamp ts : stamps) {
      const double t = to_seconds(ts - stamps.front());
      if (t < a.start_s - 1e-9 || t > a.end_s + 1e-9) continue;
      Pose p = a.motion.at(t, map);
      if (script.jitter_m > 0.0) {
        p.x += script.jitter_m * noise(rng);
        p.y += script.jitter_m * noise(rng);
        p.yaw = normalize_angle(p.yaw + 0.2 * script.jitter_m * noise(rng));
      }
      track.boxes.push_back({ts, {p.x, p.y, size.z / 2.0}, p.yaw, size, a.confidence});
    }
    if (track.boxes.empty()) continue;
    city.push_back(std::move(track));
    if (!a.color.empty()) scene.bundle.colors[a.id] = a.color;
  }

  scene.ego_frame_tracks = to_ego_frame(city, poses);
  scene.bundle.log_id = script.log_id;
  scene.bundle.ego = poses;
  scene.bundle.tracks = inject_ego_track(to_city_frame(scene.ego_frame_tracks, poses), poses);
  scene.bundle.map = map;

  for (const auto& q : script.queries) {
    auto parsed = dsl::parse_program(q.source);
    if (!parsed.ok()) {
      throw std::invalid_argument("query " + q.id + ": " + dsl::format_all(parsed.diagnostics));
    }
    const auto diags = dsl::validate_program(*parsed.program);
    if (dsl::has_errors(diags)) throw std::invalid_argument("query " + q.id + ": " + dsl::format_all(diags));
    scene.ground_truth.push_back(oracle_evaluate(*parsed.program, scene.bundle));
  }
  return scene;
}

void write_scene(const std::filesystem::path& dir, const GeneratedScene& scene) {
  std::filesystem::create_directories(dir);
  write_tracks(dir / "tracks.csv", scene.ego_frame_tracks);
  write_poses(dir / "poses.csv", scene.bundle.ego);
  scene.bundle.map.save(dir / "map.json");
  if (!scene.bundle.colors.empty()) write_colors(dir / "colors.csv", scene.bundle.colors);
}

namespace {

AgentScript agent(std::string id, Category c, std::string kind, nlohmann::json params, double start = 0.0,
                  double end = 1e9, std::string color = {}) {
  AgentScript a;
  a.id = std::move(id);
  a.category = c;
  a.motion = {std::move(kind), std::move(params)};
  a.start_s = start;
  a.end_s = end;
  a.color = std::move(color);
  return a;
}

}  // namespace

std::vector<LabeledQuery> default_queries() {
  const std::string vehicles = "vehicles = get_objects_of_category(log_dir, category=\"VEHICLE\")\n";
  const std::string peds = "peds = get_objects_of_category(log_dir, category=\"PEDESTRIAN\")\n";
  auto out = [](const std::string& var, const std::string& desc) {
    return "output_scenario(" + var + ", \"" + desc + "\", log_dir, output_dir)\n";
  };
  return {
      {"moving_vehicle", "moving vehicle",
       vehicles + "moving = has_velocity(vehicles, log_dir, min_velocity=1)\n" + out("moving", "moving vehicle")},
      {"ped_near_vehicle", "pedestrian near a vehicle",
       vehicles + peds + "near = near_objects(peds, vehicles, log_dir, distance_thresh=10, min_objects=1)\n" +
           out("near", "pedestrian near a vehicle")},
      {"vehicle_following", "vehicle following another vehicle",
       vehicles + "lead = following(vehicles, vehicles, log_dir)\n" + out("lead", "vehicle following another vehicle")},
      {"left_turn", "vehicle turning left",
       vehicles + "turns = turning(vehicles, log_dir, direction=\"left\")\n" + out("turns", "vehicle turning left")},
      {"lane_change", "vehicle changing lanes",
       vehicles + "changes = changing_lanes(vehicles, log_dir)\n" + out("changes", "vehicle changing lanes")},
      {"ped_crosswalk", "pedestrian at a crosswalk",
       peds + "at_cw = at_pedestrian_crossing(peds, log_dir)\n" + out("at_cw", "pedestrian at a crosswalk")},
      {"crossed_by_ped", "vehicle with a pedestrian crossing in front",
       vehicles + peds + "crossed = being_crossed_by(vehicles, peds, log_dir)\n" +
           out("crossed", "vehicle with a pedestrian crossing in front")},
      {"stop_sign", "vehicle at a stop sign",
       vehicles + "stopped = at_stop_sign(vehicles, log_dir)\n" + out("stopped", "vehicle at a stop sign")},
  };
}

SceneScript fixture_s1() {
  SceneScript s;
  s.log_id = "S1";
  s.seed = 1;
  s.duration_s = 5.0;
  s.rate_hz = 10.0;
  s.map_template = "straight_road";
  s.ego = {"hold", {{"x", -20.0}, {"y", -1.75}, {"yaw", 0.0}}};
  s.agents = {
      agent("T_A", Category::REGULAR_VEHICLE, "line",
            {{"x", 0.0}, {"y", 1.75}, {"heading", 0.0}, {"speed", 10.0}, {"accel", 0.0}}, 0.0, 4.0, "red"),
      agent("T_B", Category::REGULAR_VEHICLE, "line",
            {{"x", 15.0}, {"y", 1.75}, {"heading", 0.0}, {"speed", 10.0}, {"accel", 0.0}}, 0.0, 4.0, "white"),
      agent("T_C", Category::PEDESTRIAN, "hold", {{"x", 30.0}, {"y", 12.0}, {"yaw", -kPi / 2}}),
      agent("T_D", Category::REGULAR_VEHICLE, "line",
            {{"x", 80.0}, {"y", 5.25}, {"heading", kPi}, {"speed", 10.0}, {"accel", 0.0}}, 0.0, 1e9, "silver"),
  };
  s.queries = default_queries();
  return s;
}

SceneScript fixture_s1_lane_change() {
  SceneScript s = fixture_s1();
  s.log_id = "S1_lane_change";
  s.agents[0] = agent("T_A", Category::REGULAR_VEHICLE, "lane_change",
                      {{"from_lane", "L1"},
                       {"to_lane", "L0"},
                       {"s0", 100.0},
                       {"speed", 10.0},
                       {"change_start", 1.0},
                       {"change_duration", 2.0}},
                      0.0, 4.0, "red");
  return s;
}

SceneScript fixture_s2() {
  SceneScript s;
  s.log_id = "S2";
  s.seed = 2;
  s.duration_s = 15.0;
  s.rate_hz = 10.0;
  s.map_template = "straight_road";
  s.ego = {"hold", {{"x", 20.0}, {"y", 1.75}, {"yaw", 0.0}}};
  s.agents = {
      agent("P", Category::PEDESTRIAN, "crossing",
            {{"x0", 61.0}, {"y0", -16.0}, {"x1", 61.0}, {"y1", 14.0}, {"speed", 2.0}, {"start", 0.0}}),
      agent("V", Category::REGULAR_VEHICLE, "hold", {{"x", 55.0}, {"y", 1.75}, {"yaw", 0.0}}, 0.0, 1e9, "blue"),
  };
  s.queries = default_queries();
  return s;
}

SceneScript fixture_bike_group() {
  SceneScript s;
  s.log_id = "bike_group";
  s.seed = 3;
  s.duration_s = 8.0;
  s.rate_hz = 10.0;
  s.map_template = "straight_road";
  s.ego = {"hold", {{"x", -30.0}, {"y", 1.75}, {"yaw", 0.0}}};
  auto bike = [](std::string id, double s0, double speed) {
    return agent(std::move(id), Category::BICYCLIST, "lane_follow",
                 {{"lane", "LB"}, {"s0", s0}, {"speed", speed}, {"accel", 0.0}});
  };
  s.agents = {bike("B1", 100.0, 5.0), bike("B2", 102.0, 5.0), bike("B3", 104.0, 5.0), bike("B4", 160.0, 5.0),
              agent("B5", Category::BICYCLIST, "hold", {{"x", 20.0}, {"y", -6.0}, {"yaw", 0.0}})};
  s.queries = default_queries();
  return s;
}

namespace {

class Dice {
 public:
  explicit Dice(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 rng_;
};

/// Largest acceleration keeping speed within [0, 30] over the scene.
double bounded_accel(Dice& d, double v, double duration) {
  const double hi = std::min(2.0, (29.0 - v) / duration);
  return d.uniform(-2.0, std::max(-2.0, hi));
}

Motion random_vehicle_motion(Dice& d, const std::string& tmpl, double dur, Category cat) {
  const double v = d.uniform(0.0, 14.0);
  const int kind = d.integer(0, 9);
  if (kind <= 1) return {"hold", {{"x", d.uniform(-40, 60)}, {"y", d.uniform(-8, 8)}, {"yaw", d.uniform(-kPi, kPi)}}};
  if (kind == 2) {
    return {"line",
            {{"x", d.uniform(-40, 60)}, {"y", d.uniform(-8, 8)}, {"heading", d.uniform(-kPi, kPi)}, {"speed", v},
             {"accel", bounded_accel(d, v, dur)}}};
  }
  if (kind == 3) {
    const double r = d.uniform(8, 30);
    const double w = (d.chance(0.5) ? 1.0 : -1.0) * d.uniform(2.0, 12.0) / r;
    return {"arc",
            {{"cx", d.uniform(-30, 50)}, {"cy", d.uniform(-20, 20)}, {"radius", r}, {"start_angle", d.uniform(-kPi, kPi)},
             {"angular_speed", w}}};
  }
  const bool bus = cat == Category::BUS;
  if (tmpl == "straight_road") {
    if (kind <= 5) {
      const bool up = d.chance(0.5);
      return {"lane_change",
              {{"from_lane", up ? "L0" : "L1"},
               {"to_lane", up ? "L1" : "L0"},
               {"s0", d.uniform(60, 140)},
               {"speed", d.uniform(4, 14)},
               {"change_start", d.uniform(0, dur / 2)},
               {"change_duration", d.uniform(1.5, 4.0)}}};
    }
    const int lane = d.integer(0, 2);
    if (lane == 2 && !bus) {
      const double x0 = d.uniform(-20, 90);
      return {"lane_follow", {{"lane", "L2x"}, {"s0", 250.0 + 150.0 - x0}, {"speed", v}, {"accel", bounded_accel(d, v, dur)}}};
    }
    return {"lane_follow",
            {{"lane", lane == 0 ? "L0" : "L1"}, {"s0", d.uniform(60, 160)}, {"speed", v},
             {"accel", bounded_accel(d, v, dur)}}};
  }
  if (kind <= 4) {
    const bool up = d.chance(0.5);
    return {"lane_change",
            {{"from_lane", up ? "W_bus" : "W_in"},
             {"to_lane", up ? "W_in" : "W_bus"},
             {"s0", d.uniform(10, 50)},
             {"speed", d.uniform(3, 10)},
             {"change_start", d.uniform(0, dur / 2)},
             {"change_duration", d.uniform(1.5, 4.0)}}};
  }
  static const std::vector<std::string> arms = {"S", "E", "N", "W"};
  static const std::vector<std::string> moves = {"X_", "R_", "L_"};
  const std::string arm = d.pick(arms);
  const std::string move = d.pick(moves);
  const std::size_t k = static_cast<std::size_t>(std::find(arms.begin(), arms.end(), arm) - arms.begin());
  const std::size_t exit = move == "X_" ? (k + 2) % 4 : move == "R_" ? (k + 1) % 4 : (k + 3) % 4;
  const double speed = d.uniform(2, 12);
  return {"lane_follow",
          {{"lane", arm + "_in"},
           {"route", {arm + "_in", move + arm, arms[exit] + "_out"}},
           {"s0", d.uniform(20, 65)},
           {"speed", speed},
           {"accel", bounded_accel(d, speed, dur)}}};
}

Motion random_ped_motion(Dice& d, const std::string& tmpl, double dur) {
  const int kind = d.integer(0, 5);
  if (kind <= 1) return {"hold", {{"x", d.uniform(-30, 60)}, {"y", d.uniform(-12, 12)}, {"yaw", d.uniform(-kPi, kPi)}}};
  if (kind == 2) {
    return {"line",
            {{"x", d.uniform(-30, 60)}, {"y", d.uniform(-12, 12)}, {"heading", d.uniform(-kPi, kPi)},
             {"speed", d.uniform(0.3, 2.0)}, {"accel", 0.0}}};
  }
  const double speed = d.uniform(0.8, 2.0);
  const double start = d.uniform(0, dur / 2);
  const double dir = d.chance(0.5) ? 1.0 : -1.0;
  if (tmpl == "straight_road") {
    const double x = d.chance(0.5) ? d.uniform(60.5, 63.5) : d.uniform(-30, 90);
    return {"crossing",
            {{"x0", x}, {"y0", -9.0 * dir}, {"x1", x}, {"y1", 10.0 * dir}, {"speed", speed}, {"start", start}}};
  }
  const int k = d.integer(0, 3);
  const Vec2 a = quarter(Vec2{-8.0 * dir, d.uniform(-14.5, -11.5)}, k);
  const Vec2 b = quarter(Vec2{8.0 * dir, d.uniform(-14.5, -11.5)}, k);
  return {"crossing", {{"x0", a.x}, {"y0", a.y}, {"x1", b.x}, {"y1", b.y}, {"speed", speed}, {"start", start}}};
}

}  // namespace

SceneScript random_script(std::uint64_t seed) {
  Dice d(seed);
  SceneScript s;
  s.log_id = "random_" + std::to_string(seed);
  s.seed = seed;
  s.rate_hz = 2.0;
  s.duration_s = d.integer(5, 20);
  s.map_template = d.chance(0.5) ? "straight_road" : "intersection";
  s.jitter_m = 0.05;
  s.ego = random_vehicle_motion(d, s.map_template, s.duration_s, Category::REGULAR_VEHICLE);
  static const std::vector<Category> kinds = {
      Category::REGULAR_VEHICLE, Category::REGULAR_VEHICLE, Category::REGULAR_VEHICLE, Category::PEDESTRIAN,
      Category::PEDESTRIAN,      Category::BICYCLIST,       Category::BUS,             Category::BOX_TRUCK,
      Category::MOTORCYCLIST,    Category::CONSTRUCTION_CONE};
  static const std::vector<std::string> colors = {"white", "silver", "black", "red", "yellow", "blue", "green", ""};
  const int n = d.integer(1, 9);
  for (int i = 0; i < n; ++i) {
    AgentScript a;
    a.id = "A" + std::to_string(i);
    a.category = d.pick(kinds);
    switch (a.category) {
      case Category::PEDESTRIAN: a.motion = random_ped_motion(d, s.map_template, s.duration_s); break;
      case Category::CONSTRUCTION_CONE:
        a.motion = {"hold", {{"x", d.uniform(-30, 60)}, {"y", d.uniform(-8, 8)}, {"yaw", 0.0}}};
        break;
      case Category::BICYCLIST:
        if (s.map_template == "straight_road" && d.chance(0.6)) {
          const double v = d.uniform(2, 7);
          a.motion = {"lane_follow", {{"lane", "LB"}, {"s0", d.uniform(60, 160)}, {"speed", v}, {"accel", 0.0}}};
        } else {
          a.motion = random_vehicle_motion(d, s.map_template, s.duration_s, a.category);
        }
        break;
      default: a.motion = random_vehicle_motion(d, s.map_template, s.duration_s, a.category);
    }
    if (d.chance(0.3)) {
      a.start_s = std::floor(d.uniform(0, s.duration_s / 3) * 2) / 2;
      a.end_s = std::max(a.start_s + 1.0, std::floor(d.uniform(2 * s.duration_s / 3, s.duration_s) * 2) / 2);
    } else {
      a.end_s = s.duration_s;
    }
    a.confidence = d.uniform(0.3, 1.0);
    a.color = d.pick(colors);
    s.agents.push_back(std::move(a));
  }
  s.queries = default_queries();
  return s;
}

}  // namespace refmine::synth
