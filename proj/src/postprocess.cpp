#include "refmine/postprocess.hpp"

#include "refmine/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refmine {

namespace {

std::size_t parse_count(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  if (!kv.has(key)) return fallback;
  const double v = kv.get_double(key, 0.0);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw std::invalid_argument("postprocess config: " + key + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<Category> parse_classes(const std::string& text) {
  std::vector<Category> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    item = b == std::string::npos ? std::string() : item.substr(b, e - b + 1);
    if (!item.empty()) {
      const auto c = parse_category(item);
      if (!c) throw std::invalid_argument("postprocess config: unknown class '" + item + "'");
      out.push_back(*c);
    }
    pos = comma + 1;
  }
  return out;
}

Timestamp seconds_to_nanos(double s) { return static_cast<Timestamp>(std::llround(s * 1e9)); }

/// Timestamps of a related object relationship kept when the pair is close enough.
TimeSet prune_one(const TimeSet& stamps, const Track* a, const Track* b, double limit) {
  if (a == nullptr || b == nullptr) return stamps;
  std::vector<Timestamp> kept;
  kept.reserve(stamps.size());
  for (Timestamp t : stamps) {
    const auto ia = a->index_of(t);
    const auto ib = b->index_of(t);
    if (ia && ib) {
      const Vec3& pa = a->boxes[*ia].translation;
      const Vec3& pb = b->boxes[*ib].translation;
      const double d = std::sqrt((pa.x - pb.x) * (pa.x - pb.x) + (pa.y - pb.y) * (pa.y - pb.y) +
                                 (pa.z - pb.z) * (pa.z - pb.z));
      if (d > limit) continue;
    }
    kept.push_back(t);
  }
  return TimeSet(std::move(kept));
}

void copy_relationships(ScenarioSet& out, const std::string& id, const ScenarioEntry& entry) {
  for (const auto& [r, ts] : entry.related) {
    for (Timestamp t : ts) {
      if (out.contains(id, t)) out.add_relationship(id, r, t);
    }
  }
}

}  // namespace

PostprocessConfig PostprocessConfig::parse(const std::string& text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  static const char* known[] = {"top_k_large",           "top_k_other",   "large_classes",
                                "relationship_max_dist", "min_segment_s", "output_rate_hz"};
  for (const auto& [k, v] : kv.values()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* n) { return k == n; }) == std::end(known)) {
      throw std::invalid_argument("postprocess config: unknown key '" + k + "'");
    }
  }
  PostprocessConfig c;
  c.top_k_large = parse_count(kv, "top_k_large", c.top_k_large);
  c.top_k_other = parse_count(kv, "top_k_other", c.top_k_other);
  if (kv.has("large_classes")) c.large_classes = parse_classes(kv.values().at("large_classes"));
  c.relationship_max_dist = kv.get_double("relationship_max_dist", c.relationship_max_dist);
  c.min_segment_s = kv.get_double("min_segment_s", c.min_segment_s);
  c.output_rate_hz = kv.get_double("output_rate_hz", c.output_rate_hz);
  c.validate();
  return c;
}

PostprocessConfig PostprocessConfig::load(const std::filesystem::path& path) {
  const KeyValueConfig kv = KeyValueConfig::load(path);
  std::string text;
  for (const auto& [k, v] : kv.values()) text += k + " = " + v + "\n";
  return parse(text);
}

void PostprocessConfig::validate() const {
  if (top_k_large == 0 || top_k_other == 0) throw std::invalid_argument("postprocess config: top-K must be positive");
  if (!(relationship_max_dist > 0.0)) throw std::invalid_argument("postprocess config: relationship_max_dist <= 0");
  if (!(min_segment_s > 0.0) || !std::isfinite(min_segment_s)) {
    throw std::invalid_argument("postprocess config: min_segment_s must be positive");
  }
  if (!(output_rate_hz > 0.0) || !std::isfinite(output_rate_hz)) {
    throw std::invalid_argument("postprocess config: output_rate_hz must be positive");
  }
}

std::vector<Track> filter_top_k(std::vector<Track> tracks, const PostprocessConfig& config) {
  std::map<Category, std::vector<std::size_t>> by_class;
  std::vector<double> score(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    by_class[tracks[i].category].push_back(i);
    score[i] = tracks[i].summed_confidence();
  }
  std::vector<bool> keep(tracks.size(), false);
  for (auto& [cat, idx] : by_class) {
    const bool large = std::find(config.large_classes.begin(), config.large_classes.end(), cat) !=
                       config.large_classes.end();
    const std::size_t k = large ? config.top_k_large : config.top_k_other;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (score[a] != score[b]) return score[a] > score[b];
      return tracks[a].id < tracks[b].id;
    });
    for (std::size_t j = 0; j < idx.size() && j < k; ++j) keep[idx[j]] = true;
  }
  std::vector<Track> out;
  out.reserve(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (keep[i]) out.push_back(std::move(tracks[i]));
  }
  std::sort(out.begin(), out.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
  return out;
}

LogBundle filter_bundle(const LogBundle& bundle, const PostprocessConfig& config) {
  LogBundle out = bundle;
  out.tracks = filter_top_k(std::move(out.tracks), config);
  return out;
}

ScenarioSet prune_far_relationships(const ScenarioSet& result, const LogBundle& bundle,
                                    const PostprocessConfig& config) {
  ScenarioSet out;
  for (const auto& [id, entry] : result) {
    out.add(id, entry.timestamps);
    const Track* self = bundle.track(id);
    for (const auto& [r, ts] : entry.related) {
      for (Timestamp t : prune_one(ts, self, bundle.track(r), config.relationship_max_dist)) {
        out.add_relationship(id, r, t);
      }
    }
  }
  out.normalize();
  return out;
}

ScenarioSet dilate_segments(const ScenarioSet& result, const LogBundle& bundle, const PostprocessConfig& config) {
  const Timestamp min_len = seconds_to_nanos(config.min_segment_s);
  ScenarioSet out;
  for (const auto& [id, entry] : result) {
    const Track* track = bundle.track(id);
    if (track == nullptr || track->boxes.empty()) {
      out.add(id, entry.timestamps);
      copy_relationships(out, id, entry);
      continue;
    }
    const auto& boxes = track->boxes;
    const Timestamp first_obs = boxes.front().timestamp;
    const Timestamp last_obs = boxes.back().timestamp;
    std::vector<Timestamp> referred;
    // Stamps outside the track's observations pass through untouched.
    for (Timestamp t : entry.timestamps) {
      if (!track->index_of(t)) referred.push_back(t);
    }
    std::size_t i = 0;
    while (i < boxes.size()) {
      if (!entry.timestamps.contains(boxes[i].timestamp)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < boxes.size() && entry.timestamps.contains(boxes[j + 1].timestamp)) ++j;
      const Timestamp a = boxes[i].timestamp;
      const Timestamp b = boxes[j].timestamp;
      if (b - a >= min_len) {
        for (std::size_t k = i; k <= j; ++k) referred.push_back(boxes[k].timestamp);
      } else {
        const Timestamp need = min_len - (b - a);
        Timestamp lo = a - need / 2;
        Timestamp hi = b + (need - need / 2);
        if (lo < first_obs) {
          hi += first_obs - lo;
          lo = first_obs;
        }
        if (hi > last_obs) {
          lo -= hi - last_obs;
          hi = last_obs;
        }
        lo = std::max(lo, first_obs);
        // Snap outward: the last observation at or before lo through the first
        // observation at or after hi.
        auto it_lo = std::upper_bound(boxes.begin(), boxes.end(), lo,
                                      [](Timestamp v, const TrackBox& bx) { return v < bx.timestamp; });
        std::size_t s = static_cast<std::size_t>(it_lo - boxes.begin());
        s = s == 0 ? 0 : s - 1;
        auto it_hi = std::lower_bound(boxes.begin(), boxes.end(), hi,
                                      [](const TrackBox& bx, Timestamp v) { return bx.timestamp < v; });
        std::size_t e = static_cast<std::size_t>(it_hi - boxes.begin());
        if (e >= boxes.size()) e = boxes.size() - 1;
        for (std::size_t k = s; k <= e; ++k) referred.push_back(boxes[k].timestamp);
      }
      i = j + 1;
    }
    out.add(id, TimeSet(std::move(referred)));
    copy_relationships(out, id, entry);
  }
  out.normalize();
  return out;
}

ScenarioSet resample_output(const ScenarioSet& result, const LogBundle& bundle, const PostprocessConfig& config) {
  if (result.empty()) return {};
  const auto stamps = bundle.timestamps();
  if (stamps.empty()) return result;
  const Timestamp origin = stamps.front();
  const Timestamp end = stamps.back();
  const Timestamp step = seconds_to_nanos(1.0 / config.output_rate_hz);
  const Timestamp tol = step / 2;

  ScenarioSet out;
  for (const auto& [id, entry] : result) {
    const Track* track = bundle.track(id);
    if (track == nullptr || track->boxes.empty()) continue;
    const auto& boxes = track->boxes;
    std::vector<Timestamp> kept;
    for (Timestamp tick = origin; tick <= end; tick += step) {
      auto it = std::lower_bound(boxes.begin(), boxes.end(), tick,
                                 [](const TrackBox& bx, Timestamp v) { return bx.timestamp < v; });
      const TrackBox* best = nullptr;
      Timestamp best_d = 0;
      if (it != boxes.begin()) {
        best = &*(it - 1);
        best_d = tick - best->timestamp;
      }
      if (it != boxes.end() && (best == nullptr || it->timestamp - tick < best_d)) {
        best = &*it;
        best_d = it->timestamp - tick;
      }
      if (best == nullptr || best_d > tol) continue;
      if (entry.timestamps.contains(best->timestamp)) kept.push_back(best->timestamp);
    }
    if (kept.empty()) continue;
    out.add(id, TimeSet(std::move(kept)));
    copy_relationships(out, id, entry);
  }
  out.normalize();
  return out;
}

ScenarioSet postprocess(const ScenarioSet& result, const LogBundle& bundle, const PostprocessConfig& config) {
  return resample_output(dilate_segments(prune_far_relationships(result, bundle, config), bundle, config), bundle,
                         config);
}

}  // namespace refmine
