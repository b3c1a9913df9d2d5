#include "refmine/log_context.hpp"

namespace refmine {

LogContext::LogContext(const LogBundle& bundle, bool parallel) : bundle_(&bundle) {
  const auto n = static_cast<std::ptrdiff_t>(bundle.tracks.size());
  caches_.resize(bundle.tracks.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Track& track = bundle.tracks[static_cast<std::size_t>(i)];
    TrackCache& cache = caches_[static_cast<std::size_t>(i)];
    cache.track = &track;
    cache.centroids.reserve(track.boxes.size());
    cache.lanes.reserve(track.boxes.size());
    for (const auto& b : track.boxes) {
      const Vec2 c{b.translation.x, b.translation.y};
      cache.centroids.push_back(c);
      cache.lanes.push_back(bundle.map.assign_lane_index(c));
    }
    cache.states = estimate_states(track);
  }
  for (std::size_t i = 0; i < caches_.size(); ++i) by_id_.emplace(caches_[i].track->id, i);
  timestamps_ = bundle.timestamps();
  for (std::size_t i = 0; i < timestamps_.size(); ++i) slots_.emplace(timestamps_[i], i);
}

const TrackCache* LogContext::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &caches_[it->second];
}

std::optional<std::size_t> LogContext::slot_of(Timestamp t) const {
  auto it = slots_.find(t);
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

}  // namespace refmine
