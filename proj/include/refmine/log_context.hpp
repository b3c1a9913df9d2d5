#pragma once

#include "refmine/ingest.hpp"
#include "refmine/kinematics.hpp"

#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace refmine {

/// Per-track derived data, one slot per box.
struct TrackCache {
  const Track* track = nullptr;
  std::vector<Vec2> centroids;
  std::vector<KinematicState> states;
  std::vector<std::optional<std::size_t>> lanes;  ///< assigned lane index per box
};

/// Read-only caches derived once per log: centroids, kinematics and lane
/// assignments. Built in parallel over tracks; immutable afterwards.
class LogContext {
 public:
  explicit LogContext(const LogBundle& bundle, bool parallel = true);

  const LogBundle& bundle() const { return *bundle_; }
  const HDMap& map() const { return bundle_->map; }

  const TrackCache* find(std::string_view id) const;
  const std::vector<TrackCache>& tracks() const { return caches_; }

  /// Slot of `t` in the log-wide timestamp list, if observed.
  std::optional<std::size_t> slot_of(Timestamp t) const;
  const std::vector<Timestamp>& timestamps() const { return timestamps_; }

 private:
  const LogBundle* bundle_;
  std::vector<TrackCache> caches_;
  std::unordered_map<std::string_view, std::size_t> by_id_;
  std::vector<Timestamp> timestamps_;
  std::unordered_map<Timestamp, std::size_t> slots_;
};

}  // namespace refmine
