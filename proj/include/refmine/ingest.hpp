#pragma once

#include "refmine/hd_map.hpp"
#include "refmine/scenario_set.hpp"
#include "refmine/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace refmine {

struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
  friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

/// Ego-to-city transform at one timestamp.
struct EgoPose {
  Timestamp timestamp = 0;
  Vec3 translation;
  Quaternion rotation;

  /// Yaw of the ego x-axis in the city frame.
  double heading() const;
  Vec3 apply(const Vec3& p) const;
  Vec3 apply_inverse(const Vec3& p) const;

  friend bool operator==(const EgoPose&, const EgoPose&) = default;
};

EgoPose pose_from_yaw(Timestamp t, Vec3 translation, double yaw);

/// Sidecar color attributes: track id -> color name.
using ColorAttributeTable = std::map<std::string, std::string, std::less<>>;

struct LogBundle {
  std::string log_id;
  std::vector<Track> tracks;  ///< city frame, sorted by id
  std::vector<EgoPose> ego;
  HDMap map;
  ColorAttributeTable colors;

  const Track* track(std::string_view id) const;
  /// All distinct observation timestamps across tracks and poses, ascending.
  std::vector<Timestamp> timestamps() const;
};

inline constexpr std::string_view kEgoTrackId = "ego";
inline constexpr std::string_view kTracksHeader =
    "timestamp_ns,track_id,confidence,class_name,tx_m,ty_m,tz_m,length_m,width_m,height_m,yaw_rad";
inline constexpr std::string_view kPosesHeader = "timestamp_ns,tx_m,ty_m,tz_m,qw,qx,qy,qz";
inline constexpr std::string_view kScenarioHeader = "track_uuid,timestamp_ns,role,related_to";

struct TrackLoadResult {
  std::vector<Track> tracks;  ///< sorted by id
  std::size_t rejected_rows = 0;
  std::vector<std::string> diagnostics;
};

/// Reads a tracks CSV (one row per box). Unknown classes and malformed rows are
/// rejected with a diagnostic; out-of-order rows are sorted with a warning;
/// duplicate (track, timestamp) rows keep the higher confidence.
TrackLoadResult load_tracks(const std::filesystem::path& path);
TrackLoadResult parse_tracks(std::istream& in);
void write_tracks(const std::filesystem::path& path, const std::vector<Track>& tracks);

std::vector<EgoPose> load_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, const std::vector<EgoPose>& poses);

ColorAttributeTable load_colors(const std::filesystem::path& path);
void write_colors(const std::filesystem::path& path, const ColorAttributeTable& colors);

/// Moves ego-frame boxes into the city frame using the pose at each timestamp.
/// Throws std::runtime_error naming the first timestamp without a pose.
std::vector<Track> to_city_frame(const std::vector<Track>& ego_tracks, const std::vector<EgoPose>& poses);
std::vector<Track> to_ego_frame(const std::vector<Track>& city_tracks, const std::vector<EgoPose>& poses);

/// Appends the EGO_VEHICLE track (one box per pose) in the city frame.
/// Throws std::logic_error if an EGO_VEHICLE track is already present.
std::vector<Track> inject_ego_track(std::vector<Track> city_tracks, const std::vector<EgoPose>& poses);

/// Loads tracks.csv, poses.csv, map.json and optional colors.csv from `dir`,
/// converts to the city frame and injects the ego track.
LogBundle load_log_bundle(const std::filesystem::path& dir);

/// Writes a bundle back out in the on-disk formats (tracks in the ego frame,
/// without the injected ego track).
void write_log_bundle(const std::filesystem::path& dir, const LogBundle& bundle);

/// 16 hex digits identifying a description; used in output file names.
std::string description_hash(std::string_view description);

struct ScenarioFile {
  std::string log_id;
  std::string description;
  ScenarioSet scenario;
};

struct ScenarioOutputPaths {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// Writes scenario_<hash>.csv and scenario_<hash>.json into `out_dir`.
ScenarioOutputPaths write_scenario_output(const ScenarioSet& result, std::string_view description,
                                          std::string_view log_id, const std::filesystem::path& out_dir);

std::string scenario_csv(const ScenarioSet& result);
ScenarioSet parse_scenario_csv(std::istream& in);
ScenarioSet read_scenario_csv(const std::filesystem::path& path);
/// Reads the JSON mirror (description, log id and scenario).
ScenarioFile read_scenario_json(const std::filesystem::path& path);

}  // namespace refmine
