#pragma once

#include "refmine/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace refmine::testing {

inline Timestamp sec(double s) { return static_cast<Timestamp>(std::llround(s * 1e9)); }

struct Pose2 {
  double t = 0;  ///< seconds
  double x = 0, y = 0, yaw = 0;
};

Track make_track(const std::string& id, Category cat, const std::vector<Pose2>& poses, Vec3 size = {4, 2, 1.5},
                 double confidence = 1.0);

/// Uniformly sampled straight motion from (x0, y0) with heading yaw.
Track line_track(const std::string& id, Category cat, double t0, double t1, double rate_hz, double x0, double y0,
                 double yaw, double speed);

LogBundle bundle_of(std::vector<Track> tracks, HDMap map = {});

/// Random scenario over the given ids and stamps, with random relationships.
ScenarioSet random_scenario(std::mt19937_64& rng, const std::vector<std::string>& ids,
                            const std::vector<Timestamp>& stamps, double density = 0.4);

/// Rotates the whole scene (tracks, ego poses, map) by `theta` about the
/// origin, then translates it.
LogBundle rigid_transform(const LogBundle& bundle, double theta, Vec2 translation);

std::filesystem::path source_path(const std::string& relative);
/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);
std::string read_text(const std::filesystem::path& p);

}  // namespace refmine::testing
