#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace refmine::testing {

Track make_track(const std::string& id, Category cat, const std::vector<Pose2>& poses, Vec3 size, double confidence) {
  Track t;
  t.id = id;
  t.category = cat;
  for (const auto& p : poses) {
    TrackBox b;
    b.timestamp = sec(p.t);
    b.translation = {p.x, p.y, size.z / 2};
    b.yaw = p.yaw;
    b.size = size;
    b.confidence = confidence;
    t.boxes.push_back(b);
  }
  return t;
}

Track line_track(const std::string& id, Category cat, double t0, double t1, double rate_hz, double x0, double y0,
                 double yaw, double speed) {
  std::vector<Pose2> poses;
  const int n = static_cast<int>(std::llround((t1 - t0) * rate_hz));
  for (int k = 0; k <= n; ++k) {
    const double t = t0 + k / rate_hz;
    const double d = speed * (t - t0);
    poses.push_back({t, x0 + d * std::cos(yaw), y0 + d * std::sin(yaw), yaw});
  }
  return make_track(id, cat, poses);
}

LogBundle rigid_transform(const LogBundle& bundle, double theta, Vec2 translation) {
  const double c = std::cos(theta), s = std::sin(theta);
  auto move = [&](Vec3 p) {
    return Vec3{c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y, p.z};
  };
  LogBundle out = bundle;
  for (auto& t : out.tracks) {
    for (auto& b : t.boxes) {
      b.translation = move(b.translation);
      b.yaw = normalize_angle(b.yaw + theta);
    }
  }
  for (auto& p : out.ego) p = pose_from_yaw(p.timestamp, move(p.translation), p.heading() + theta);
  out.map = bundle.map.transformed(theta, translation);
  return out;
}

LogBundle bundle_of(std::vector<Track> tracks, HDMap map) {
  LogBundle b;
  b.log_id = "test";
  std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& c) { return a.id < c.id; });
  b.tracks = std::move(tracks);
  b.map = std::move(map);
  return b;
}

ScenarioSet random_scenario(std::mt19937_64& rng, const std::vector<std::string>& ids,
                            const std::vector<Timestamp>& stamps, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScenarioSet out;
  for (const auto& id : ids) {
    for (Timestamp t : stamps) {
      if (u(rng) >= density) continue;
      out.add(id, t);
      for (const auto& r : ids) {
        if (r != id && u(rng) < 0.2) out.add_relationship(id, r, t);
      }
    }
  }
  return out;
}

std::filesystem::path source_path(const std::string& relative) {
  return std::filesystem::path(REFMINE_SOURCE_DIR) / relative;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("refmine_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace refmine::testing
