#pragma once

#include "refmine/ingest.hpp"
#include "refmine/predicates.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace refmine::dsl {
struct Program;
}

namespace refmine::synth {

/// Map templates: "straight_road" and "intersection".
HDMap build_map(std::string_view template_id);
const std::vector<std::string>& map_templates();

/// Pose of a scripted object at one instant.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// One motion primitive with JSON parameters:
///   hold        {x, y, yaw}
///   line        {x, y, heading, speed, accel}      speed clamps at 0
///   arc         {cx, cy, radius, start_angle, angular_speed}
///   lane_follow {lane, s0, speed, accel}           first-successor chain
///   lane_change {from_lane, to_lane, s0, speed, change_start, change_duration}
///   crossing    {x0, y0, x1, y1, speed, start}     waits, walks, then stops
struct Motion {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();

  /// Pose `t` seconds after the scene start. Throws std::invalid_argument on
  /// an unknown primitive, missing parameter or unknown lane.
  Pose at(double t, const HDMap& map) const;
};

struct AgentScript {
  std::string id;
  Category category = Category::REGULAR_VEHICLE;
  std::optional<Vec3> size;  ///< default per category
  Motion motion;
  double start_s = 0.0;
  double end_s = 1e9;  ///< observed while start_s <= t <= end_s
  double confidence = 1.0;
  std::string color;  ///< empty for none
};

/// A labeled query: ground truth is the program's result on the oracle.
struct LabeledQuery {
  std::string id;
  std::string description;
  std::string source;  ///< DSL program text
};

struct SceneScript {
  std::string log_id;
  std::uint64_t seed = 0;
  double duration_s = 5.0;
  double rate_hz = 10.0;
  std::string map_template = "straight_road";
  double jitter_m = 0.0;  ///< std-dev of positional noise
  Motion ego;
  std::vector<AgentScript> agents;
  std::vector<LabeledQuery> queries;

  /// Throws std::invalid_argument naming the first problem.
  void validate() const;
  nlohmann::json to_json() const;
  static SceneScript from_json(const nlohmann::json& doc);
  static SceneScript load(const std::filesystem::path& path);
};

struct GeneratedScene {
  LogBundle bundle;
  std::vector<Track> ego_frame_tracks;  ///< what tracks.csv holds, sorted by id
  /// Oracle result per labeled query, in script order (before postprocessing).
  std::vector<ScenarioSet> ground_truth;
};

/// Deterministic for a given script. The bundle is round-tripped through the
/// ego frame exactly as loading it from disk would.
GeneratedScene generate_scene(const SceneScript& script);

/// Writes the bundle in the on-disk formats so that loading it reproduces
/// `scene.bundle` exactly.
void write_scene(const std::filesystem::path& dir, const GeneratedScene& scene);

/// Sample timestamps of a script, ns.
std::vector<Timestamp> scene_timestamps(const SceneScript& script);
inline constexpr Timestamp kSceneEpoch = 1'600'000'000'000'000'000;

/// Fixtures. S1: straight road, T_A/T_B convoy in L1, oncoming T_D in L2,
/// pedestrian T_C off-road. S2: vehicle V stopped before a crosswalk while
/// pedestrian P walks across its front.
SceneScript fixture_s1();
SceneScript fixture_s1_lane_change();  ///< T_A drifts from L1 into L0
SceneScript fixture_s2();
SceneScript fixture_bike_group();      ///< three bicyclists riding together

/// Random scene: 2 Hz, 5-20 s, at most 9 scripted agents plus ego, jittered.
SceneScript random_script(std::uint64_t seed);

/// Default query set attached to random scenes.
std::vector<LabeledQuery> default_queries();

/// Runs one program on the brute-force oracle over `bundle`.
ScenarioSet oracle_evaluate(const dsl::Program& program, const LogBundle& bundle,
                            const EngineConstants& constants = {});

/// Default box size for a category (length, width, height).
Vec3 default_size(Category c);

}  // namespace refmine::synth
