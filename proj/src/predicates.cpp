#include "refmine/predicates.hpp"

#include "refmine/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace refmine {

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "forward") return Direction::forward;
  if (s == "backward") return Direction::backward;
  if (s == "left") return Direction::left;
  if (s == "right") return Direction::right;
  return std::nullopt;
}

std::optional<TurnDirection> parse_turn_direction(std::string_view s) {
  if (s == "left") return TurnDirection::left;
  if (s == "right") return TurnDirection::right;
  return std::nullopt;
}

std::optional<RelativeHeading> parse_relative_heading(std::string_view s) {
  if (s == "same") return RelativeHeading::same;
  if (s == "opposite") return RelativeHeading::opposite;
  if (s == "perpendicular") return RelativeHeading::perpendicular;
  return std::nullopt;
}

std::optional<CrossingSense> parse_crossing_sense(std::string_view s) {
  if (s == "clockwise") return CrossingSense::clockwise;
  if (s == "counterclockwise") return CrossingSense::counterclockwise;
  if (s == "either") return CrossingSense::either;
  return std::nullopt;
}

std::optional<RoadSide> parse_road_side(std::string_view s) {
  if (s == "same") return RoadSide::same;
  if (s == "opposite") return RoadSide::opposite;
  return std::nullopt;
}

bool is_supported_color(std::string_view color) {
  static constexpr std::array<std::string_view, 6> kColors = {"white", "silver", "black", "red", "yellow", "blue"};
  return std::find(kColors.begin(), kColors.end(), color) != kColors.end();
}

EngineConstants EngineConstants::load(const std::filesystem::path& path) {
  const auto cfg = KeyValueConfig::load(path);
  EngineConstants c;
  c.turn_threshold_rad = cfg.get_double("turn_threshold_rad", c.turn_threshold_rad);
  c.turn_window_s = cfg.get_double("turn_window_s", c.turn_window_s);
  c.lane_change_dilation_s = cfg.get_double("lane_change_dilation_s", c.lane_change_dilation_s);
  c.moving_speed = cfg.get_double("moving_speed", c.moving_speed);
  c.stationary_displacement = cfg.get_double("stationary_displacement", c.stationary_displacement);
  c.following_max_angle_deg = cfg.get_double("following_max_angle_deg", c.following_max_angle_deg);
  c.stop_sign_radius = cfg.get_double("stop_sign_radius", c.stop_sign_radius);
  c.side_lane_search = cfg.get_double("side_lane_search", c.side_lane_search);
  return c;
}

void check_range(std::string_view what, double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
    throw std::invalid_argument(std::string(what) + ": minimum " + std::to_string(lo) + " exceeds maximum " +
                                std::to_string(hi));
  }
}

void check_angle(std::string_view what, double degrees) {
  if (!(degrees > 0.0 && degrees <= 180.0)) {
    throw std::invalid_argument(std::string(what) + ": angle must be in (0, 180] degrees, got " +
                                std::to_string(degrees));
  }
}

ScenarioSet carry_relationships(ScenarioSet result, const ScenarioSet& candidates) {
  std::vector<std::tuple<std::string, std::string, Timestamp>> extra;
  for (const auto& [id, e] : result) {
    const auto* c = candidates.find(id);
    if (c == nullptr) continue;
    for (const auto& [rel, ts] : c->related) {
      for (Timestamp t : TimeSet::set_intersection(ts, e.timestamps)) extra.emplace_back(id, rel, t);
    }
  }
  for (const auto& [id, rel, t] : extra) result.add_relationship(id, rel, t);
  return result;
}

namespace {

// Divide before scaling so that 180 degrees maps to exactly pi.
constexpr double deg_to_rad(double d) { return d / 180.0 * std::numbers::pi; }
constexpr double rad_to_deg(double r) { return r / std::numbers::pi * 180.0; }

struct Candidate {
  const std::string* id;
  const ScenarioEntry* entry;
  const TrackCache* cache;
};

struct RelatedObj {
  const std::string* id;
  const TrackCache* cache;
  std::size_t box;
};

using RelatedIndex = std::vector<std::vector<RelatedObj>>;

struct Hit {
  Timestamp t;
  std::vector<const std::string*> related;
};

std::vector<Candidate> collect(const LogContext& ctx, const ScenarioSet& set) {
  std::vector<Candidate> out;
  out.reserve(set.size());
  for (const auto& [id, e] : set) {
    if (const auto* cache = ctx.find(id)) out.push_back({&id, &e, cache});
  }
  return out;
}

RelatedIndex index_related(const LogContext& ctx, const ScenarioSet& related) {
  RelatedIndex idx(ctx.timestamps().size());
  for (const auto& [id, e] : related) {
    const auto* cache = ctx.find(id);
    if (cache == nullptr) continue;
    for (Timestamp t : e.timestamps) {
      auto box = cache->track->index_of(t);
      auto slot = ctx.slot_of(t);
      if (box && slot) idx[*slot].push_back({&id, cache, *box});
    }
  }
  return idx;
}

/// Keeps candidate (id, t) pairs for which keep(cache, box) holds.
template <typename Keep>
ScenarioSet run_unary(const LogContext& ctx, const ScenarioSet& candidates, bool parallel, Keep keep) {
  const auto cands = collect(ctx, candidates);
  std::vector<std::vector<Timestamp>> kept(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& c = cands[static_cast<std::size_t>(i)];
    for (Timestamp t : c.entry->timestamps) {
      auto box = c.cache->track->index_of(t);
      if (box && keep(*c.cache, *box)) kept[static_cast<std::size_t>(i)].push_back(t);
    }
  }
  ScenarioSet out;
  for (std::size_t i = 0; i < cands.size(); ++i) out.add(*cands[i].id, TimeSet(std::move(kept[i])));
  return carry_relationships(std::move(out), candidates);
}

/// For each candidate (id, t) calls match(cache, box, objs, hits) with the related
/// objects present at t; a true return keeps the pair and its listed relationships.
template <typename Match>
ScenarioSet run_relational(const LogContext& ctx, const ScenarioSet& candidates, const ScenarioSet& related,
                           bool parallel, Match match) {
  const auto cands = collect(ctx, candidates);
  const auto index = index_related(ctx, related);
  std::vector<std::vector<Hit>> hits(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& c = cands[static_cast<std::size_t>(i)];
    std::vector<const std::string*> rel;
    for (Timestamp t : c.entry->timestamps) {
      auto box = c.cache->track->index_of(t);
      auto slot = ctx.slot_of(t);
      if (!box || !slot) continue;
      rel.clear();
      if (match(*c.cache, *box, index[*slot], rel)) hits[static_cast<std::size_t>(i)].push_back({t, rel});
    }
  }
  ScenarioSet out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (const auto& h : hits[i]) {
      out.add(*cands[i].id, h.t);
      for (const auto* r : h.related) out.add_relationship(*cands[i].id, *r, h.t);
    }
  }
  return carry_relationships(std::move(out), candidates);
}

/// Related-object position in the candidate's box frame (x forward, y left).
Vec2 to_local(const TrackCache& c, std::size_t box, Vec2 p) {
  const double yaw = c.track->boxes[box].yaw;
  const Vec2 d = p - c.centroids[box];
  const double cs = std::cos(yaw);
  const double sn = std::sin(yaw);
  return {cs * d.x + sn * d.y, -sn * d.x + cs * d.y};
}

struct DirectionFrame {
  Vec2 axis;
  Vec2 lateral;  ///< axis rotated +90 degrees
  bool along_length;
};

DirectionFrame frame_for(Direction d) {
  switch (d) {
    case Direction::forward: return {{1, 0}, {0, 1}, true};
    case Direction::backward: return {{-1, 0}, {0, -1}, true};
    case Direction::left: return {{0, 1}, {-1, 0}, false};
    case Direction::right: return {{0, -1}, {1, 0}, false};
  }
  return {{1, 0}, {0, 1}, true};
}

/// Largest count allowed by a maximum.
std::size_t count_limit(double v) {
  if (!(v < 1e18)) return std::numeric_limits<std::size_t>::max();
  return v <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(v));
}

/// Smallest count meeting a minimum.
std::size_t count_floor(double v) {
  if (!(v < 1e18)) return std::numeric_limits<std::size_t>::max();
  return v <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(v));
}

std::int64_t seconds_to_ns(double s) { return static_cast<std::int64_t>(std::llround(s * 1e9)); }

}  // namespace

Engine::Engine(const LogBundle& bundle, EngineConstants constants, bool parallel)
    : ctx_(bundle, parallel), constants_(constants), parallel_(parallel) {}

ScenarioSet Engine::get_objects_of_category(std::string_view category) const {
  const auto cats = expand_category(category);
  ScenarioSet out;
  for (const auto& t : ctx_.bundle().tracks) {
    if (std::find(cats.begin(), cats.end(), t.category) == cats.end()) continue;
    std::vector<Timestamp> ts;
    ts.reserve(t.boxes.size());
    for (const auto& b : t.boxes) ts.push_back(b.timestamp);
    out.add(t.id, TimeSet(std::move(ts)));
  }
  return out;
}

ScenarioSet Engine::is_category(const ScenarioSet& candidates, std::string_view category) const {
  const auto cats = expand_category(category);
  return run_unary(ctx_, candidates, false, [&](const TrackCache& c, std::size_t) {
    return std::find(cats.begin(), cats.end(), c.track->category) != cats.end();
  });
}

ScenarioSet Engine::has_velocity(const ScenarioSet& candidates, double min_velocity, double max_velocity) const {
  check_range("has_velocity", min_velocity, max_velocity);
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    const double s = c.states[i].speed;
    return s >= min_velocity && s <= max_velocity;
  });
}

ScenarioSet Engine::stationary(const ScenarioSet& candidates) const {
  const double limit = constants_.stationary_displacement;
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t) {
    const auto& p = c.centroids;
    // Bounding-box diagonal under the limit proves stationarity without the pairwise scan.
    const Aabb box = bounding_box(p);
    if (std::hypot(box.max_x - box.min_x, box.max_y - box.min_y) < limit) return true;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = i + 1; j < p.size(); ++j) {
        if ((p[j] - p[i]).norm() >= limit) return false;
      }
    }
    return true;
  });
}

ScenarioSet Engine::accelerating(const ScenarioSet& candidates, double min_accel, double max_accel) const {
  check_range("accelerating", min_accel, max_accel);
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    const double a = c.states[i].accel_forward;
    return a >= min_accel && a <= max_accel;
  });
}

ScenarioSet Engine::has_lateral_acceleration(const ScenarioSet& candidates, double min_accel, double max_accel) const {
  check_range("has_lateral_acceleration", min_accel, max_accel);
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    const double a = c.states[i].accel_lateral;
    return a >= min_accel && a <= max_accel;
  });
}

ScenarioSet Engine::turning(const ScenarioSet& candidates, TurnDirection direction) const {
  const auto cands = collect(ctx_, candidates);
  const std::int64_t window = seconds_to_ns(constants_.turn_window_s);
  const double thresh = constants_.turn_threshold_rad;
  std::vector<std::vector<Timestamp>> kept(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& c = cands[static_cast<std::size_t>(k)];
    const auto& boxes = c.cache->track->boxes;
    const auto yaw = unwrap_yaw(*c.cache->track);
    const std::size_t m = boxes.size();
    // Difference array over box indices marking turning windows.
    std::vector<int> marks(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t last = i;
      for (std::size_t j = i + 1; j < m && boxes[j].timestamp - boxes[i].timestamp <= window; ++j) {
        const double dy = yaw[j] - yaw[i];
        const bool left = dy > thresh && direction != TurnDirection::right;
        const bool right = dy < -thresh && direction != TurnDirection::left;
        if (left || right) last = j;
      }
      if (last > i) {
        marks[i] += 1;
        marks[last + 1] -= 1;
      }
    }
    int run = 0;
    auto& out = kept[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < m; ++i) {
      run += marks[i];
      if (run > 0 && c.entry->timestamps.contains(boxes[i].timestamp)) out.push_back(boxes[i].timestamp);
    }
  }
  ScenarioSet result;
  for (std::size_t i = 0; i < cands.size(); ++i) result.add(*cands[i].id, TimeSet(std::move(kept[i])));
  return carry_relationships(std::move(result), candidates);
}

ScenarioSet Engine::changing_lanes(const ScenarioSet& candidates, TurnDirection direction) const {
  const auto cands = collect(ctx_, candidates);
  const std::int64_t dilation = seconds_to_ns(constants_.lane_change_dilation_s);
  const auto& lanes = ctx_.map().lanes();
  std::vector<std::vector<Timestamp>> kept(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& c = cands[static_cast<std::size_t>(k)];
    const auto& boxes = c.cache->track->boxes;
    const auto& assigned = c.cache->lanes;
    std::vector<Timestamp> events;
    for (std::size_t i = 1; i < boxes.size(); ++i) {
      if (!assigned[i - 1] || !assigned[i] || *assigned[i - 1] == *assigned[i]) continue;
      const auto& from = lanes[*assigned[i - 1]];
      const auto& to_id = lanes[*assigned[i]].id;
      const bool left = from.left_neighbor && *from.left_neighbor == to_id;
      const bool right = from.right_neighbor && *from.right_neighbor == to_id;
      if ((left && direction != TurnDirection::right) || (right && direction != TurnDirection::left)) {
        events.push_back(boxes[i].timestamp);
      }
    }
    if (events.empty()) continue;
    auto& out = kept[static_cast<std::size_t>(k)];
    std::size_t e = 0;
    for (const auto& b : boxes) {
      while (e < events.size() && events[e] + dilation < b.timestamp) ++e;
      if (e < events.size() && std::abs(events[e] - b.timestamp) <= dilation &&
          c.entry->timestamps.contains(b.timestamp)) {
        out.push_back(b.timestamp);
      }
    }
  }
  ScenarioSet result;
  for (std::size_t i = 0; i < cands.size(); ++i) result.add(*cands[i].id, TimeSet(std::move(kept[i])));
  return carry_relationships(std::move(result), candidates);
}

ScenarioSet Engine::facing_toward(const ScenarioSet& candidates, const ScenarioSet& related, double within_angle,
                                  double max_distance) const {
  check_angle("facing_toward", within_angle);
  const double max_angle = deg_to_rad(within_angle);
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          const Vec2 p = c.centroids[i];
                          const Vec2 fwd = heading_vector(c.track->boxes[i].yaw);
                          for (const auto& o : objs) {
                            if (o.cache == &c) continue;
                            const Vec2 d = o.cache->centroids[o.box] - p;
                            const double dist = d.norm();
                            if (dist > 0.0 && dist <= max_distance && angle_between(fwd, d) <= max_angle) {
                              rel.push_back(o.id);
                            }
                          }
                          return !rel.empty();
                        });
}

ScenarioSet Engine::heading_toward(const ScenarioSet& candidates, const ScenarioSet& related, double angle_threshold,
                                   double minimum_speed, double max_distance) const {
  check_angle("heading_toward", angle_threshold);
  const double max_angle = deg_to_rad(angle_threshold);
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          const Vec2 v = c.states[i].velocity;
                          if (!(c.states[i].speed > 0.0)) return false;
                          const Vec2 p = c.centroids[i];
                          for (const auto& o : objs) {
                            if (o.cache == &c) continue;
                            const Vec2 d = o.cache->centroids[o.box] - p;
                            const double dist = d.norm();
                            if (!(dist > 0.0) || dist > max_distance) continue;
                            if (angle_between(v, d) <= max_angle && v.dot(d) / dist >= minimum_speed) {
                              rel.push_back(o.id);
                            }
                          }
                          return !rel.empty();
                        });
}

ScenarioSet Engine::heading_in_relative_direction_to(const ScenarioSet& candidates, const ScenarioSet& related,
                                                     RelativeHeading direction) const {
  const double moving = constants_.moving_speed;
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          if (c.states[i].speed < moving) return false;
                          const Vec2 v = c.states[i].velocity;
                          for (const auto& o : objs) {
                            if (o.cache == &c) continue;
                            const auto& s = o.cache->states[o.box];
                            if (s.speed < moving) continue;
                            const double deg = rad_to_deg(angle_between(v, s.velocity));
                            const bool hit = direction == RelativeHeading::same            ? deg < 45.0
                                             : direction == RelativeHeading::perpendicular ? (deg >= 45.0 && deg < 135.0)
                                                                                           : deg >= 135.0;
                            if (hit) rel.push_back(o.id);
                          }
                          return !rel.empty();
                        });
}

namespace {

/// Related objects qualifying in `direction` of candidate box i, nearest first.
void directional_hits(const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, Direction direction,
                      double within_distance, double lateral_thresh,
                      std::vector<std::pair<double, const std::string*>>& found) {
  const auto& box = c.track->boxes[i];
  const double hl = box.size.x / 2.0;
  const double hw = box.size.y / 2.0;
  found.clear();
  for (const auto& o : objs) {
    if (o.cache == &c) continue;
    const Vec2 q = o.cache->centroids[o.box];
    const Vec2 local = to_local(c, i, q);
    double axial = 0.0;
    double lateral = 0.0;
    bool half_space = false;
    switch (direction) {
      case Direction::forward:
        half_space = local.x > kGeomEps;
        axial = local.x - hl;
        lateral = std::abs(local.y) - hw;
        break;
      case Direction::backward:
        half_space = local.x < -kGeomEps;
        axial = -local.x - hl;
        lateral = std::abs(local.y) - hw;
        break;
      case Direction::left:
        half_space = local.y > kGeomEps;
        axial = local.y - hw;
        lateral = std::abs(local.x) - hl;
        break;
      case Direction::right:
        half_space = local.y < -kGeomEps;
        axial = -local.y - hw;
        lateral = std::abs(local.x) - hl;
        break;
    }
    if (half_space && axial <= within_distance + kGeomEps && lateral <= lateral_thresh + kGeomEps) {
      found.emplace_back((q - c.centroids[i]).norm(), o.id);
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : *a.second < *b.second;
  });
}

}  // namespace

ScenarioSet Engine::has_objects_in_relative_direction(const ScenarioSet& candidates, const ScenarioSet& related,
                                                      Direction direction, double min_number, double max_number,
                                                      double within_distance, double lateral_thresh) const {
  const std::size_t min_n = count_floor(min_number);
  const std::size_t max_n = count_limit(max_number);
  const auto cands = collect(ctx_, candidates);
  const auto index = index_related(ctx_, related);
  std::vector<std::vector<Hit>> hits(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& c = cands[static_cast<std::size_t>(k)];
    std::vector<std::pair<double, const std::string*>> found;
    for (Timestamp t : c.entry->timestamps) {
      auto box = c.cache->track->index_of(t);
      auto slot = ctx_.slot_of(t);
      if (!box || !slot) continue;
      directional_hits(*c.cache, *box, index[*slot], direction, within_distance, lateral_thresh, found);
      if (found.size() < min_n) continue;
      Hit h{t, {}};
      for (std::size_t j = 0; j < found.size() && j < max_n; ++j) h.related.push_back(found[j].second);
      hits[static_cast<std::size_t>(k)].push_back(std::move(h));
    }
  }
  ScenarioSet out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (const auto& h : hits[i]) {
      out.add(*cands[i].id, h.t);
      for (const auto* r : h.related) out.add_relationship(*cands[i].id, *r, h.t);
    }
  }
  return carry_relationships(std::move(out), candidates);
}

ScenarioSet Engine::get_objects_in_relative_direction(const ScenarioSet& candidates, const ScenarioSet& related,
                                                      Direction direction, double min_number, double max_number,
                                                      double within_distance, double lateral_thresh) const {
  const std::size_t min_n = count_floor(min_number);
  const std::size_t max_n = count_limit(max_number);
  const auto cands = collect(ctx_, candidates);
  const auto index = index_related(ctx_, related);
  std::vector<std::vector<Hit>> hits(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& c = cands[static_cast<std::size_t>(k)];
    std::vector<std::pair<double, const std::string*>> found;
    for (Timestamp t : c.entry->timestamps) {
      auto box = c.cache->track->index_of(t);
      auto slot = ctx_.slot_of(t);
      if (!box || !slot) continue;
      directional_hits(*c.cache, *box, index[*slot], direction, within_distance, lateral_thresh, found);
      if (found.empty() || found.size() < min_n) continue;
      Hit h{t, {}};
      for (std::size_t j = 0; j < found.size() && j < max_n; ++j) h.related.push_back(found[j].second);
      hits[static_cast<std::size_t>(k)].push_back(std::move(h));
    }
  }
  ScenarioSet out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (const auto& h : hits[i]) {
      for (const auto* r : h.related) out.add_relationship(*r, *cands[i].id, h.t);
    }
  }
  return out;
}

ScenarioSet Engine::being_crossed_by(const ScenarioSet& candidates, const ScenarioSet& related, Direction direction,
                                     CrossingSense in_direction, double forward_thresh, double lateral_thresh) const {
  const auto cands = collect(ctx_, candidates);
  const auto rels = collect(ctx_, related);
  const DirectionFrame frame = frame_for(direction);
  std::vector<std::vector<std::pair<Timestamp, const std::string*>>> hits(cands.size());
  const auto n = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(dynamic) if (parallel_)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& c = cands[static_cast<std::size_t>(k)];
    const Track& ct = *c.cache->track;
    auto& out = hits[static_cast<std::size_t>(k)];
    std::vector<double> axial;
    std::vector<double> lateral;
    std::vector<Timestamp> stamps;
    for (const auto& r : rels) {
      if (r.cache == c.cache) continue;
      const Track& rt = *r.cache->track;
      axial.clear();
      lateral.clear();
      stamps.clear();
      std::vector<double> half;
      // Merge-walk the two tracks' box sequences.
      std::size_t a = 0;
      std::size_t b = 0;
      while (a < ct.boxes.size() && b < rt.boxes.size()) {
        const Timestamp ta = ct.boxes[a].timestamp;
        const Timestamp tb = rt.boxes[b].timestamp;
        if (ta < tb) {
          ++a;
        } else if (tb < ta) {
          ++b;
        } else {
          if (r.entry->timestamps.contains(ta)) {
            const Vec2 local = to_local(*c.cache, a, r.cache->centroids[b]);
            axial.push_back(local.dot(frame.axis));
            lateral.push_back(local.dot(frame.lateral));
            half.push_back(frame.along_length ? ct.boxes[a].size.x / 2.0 : ct.boxes[a].size.y / 2.0);
            stamps.push_back(ta);
          }
          ++a;
          ++b;
        }
      }
      // A crossing is a flip against the last side seen; the band around the midline has no side.
      auto side = [](double v) { return v > kGeomEps ? 1 : (v < -kGeomEps ? -1 : 0); };
      int last = stamps.empty() ? 0 : side(lateral[0]);
      for (std::size_t s = 1; s < stamps.size(); ++s) {
        const int now = side(lateral[s]);
        if (now == 0) continue;
        const int was = last;
        last = now;
        if (was == 0 || was == now) continue;
        if (axial[s] < half[s] - kGeomEps || axial[s] > half[s] + forward_thresh + kGeomEps) continue;
        const bool ccw = now > 0;
        if ((in_direction == CrossingSense::counterclockwise && !ccw) ||
            (in_direction == CrossingSense::clockwise && ccw)) {
          continue;
        }
        for (std::size_t j = s; j < stamps.size(); ++j) {
          if (j > s && std::abs(lateral[j]) > lateral_thresh + kGeomEps) break;
          if (c.entry->timestamps.contains(stamps[j])) out.emplace_back(stamps[j], r.id);
        }
      }
    }
  }
  ScenarioSet out;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (const auto& [t, r] : hits[i]) out.add_relationship(*cands[i].id, *r, t);
  }
  return carry_relationships(std::move(out), candidates);
}

ScenarioSet Engine::near_objects(const ScenarioSet& candidates, const ScenarioSet& related, double distance_thresh,
                                 double min_objects, bool include_self) const {
  const std::size_t min_n = count_floor(min_objects);
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          const Vec2 p = c.centroids[i];
                          for (const auto& o : objs) {
                            if (o.cache == &c && !include_self) continue;
                            if ((o.cache->centroids[o.box] - p).norm() <= distance_thresh) rel.push_back(o.id);
                          }
                          if (rel.size() >= min_n) return true;
                          rel.clear();
                          return false;
                        });
}

ScenarioSet Engine::following(const ScenarioSet& candidates, const ScenarioSet& related) const {
  const double moving = constants_.moving_speed;
  const double max_angle = deg_to_rad(constants_.following_max_angle_deg);
  const auto& map = ctx_.map();
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          const auto& lane = c.lanes[i];
                          if (!lane || c.states[i].speed < moving) return false;
                          const Vec2 p = c.centroids[i];
                          const Vec2 lane_dir = map.lane_direction_at(*lane, p);
                          for (const auto& o : objs) {
                            if (o.cache == &c) continue;
                            const auto& olane = o.cache->lanes[o.box];
                            const auto& os = o.cache->states[o.box];
                            if (!olane || os.speed < moving || !map.lanes_connected(*lane, *olane)) continue;
                            if (angle_between(c.states[i].velocity, os.velocity) > max_angle) continue;
                            if ((o.cache->centroids[o.box] - p).dot(lane_dir) > 0.0) rel.push_back(o.id);
                          }
                          return !rel.empty();
                        });
}

ScenarioSet Engine::at_pedestrian_crossing(const ScenarioSet& candidates, double within_distance) const {
  const auto& layer = ctx_.map().crossing_layer();
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    return distance_to_layer(c.centroids[i], layer) <= within_distance + kGeomEps;
  });
}

ScenarioSet Engine::on_lane_type(const ScenarioSet& candidates, LaneType lane_type) const {
  const auto& lanes = ctx_.map().lanes();
  return run_unary(ctx_, candidates, false, [&](const TrackCache& c, std::size_t i) {
    return c.lanes[i] && lanes[*c.lanes[i]].lane_type == lane_type;
  });
}

ScenarioSet Engine::near_intersection(const ScenarioSet& candidates, double threshold) const {
  const auto& layer = ctx_.map().intersection_layer();
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    return distance_to_layer(c.centroids[i], layer) <= threshold + kGeomEps;
  });
}

ScenarioSet Engine::on_intersection(const ScenarioSet& candidates) const { return near_intersection(candidates, 0.0); }

ScenarioSet Engine::at_stop_sign(const ScenarioSet& candidates, double forward_thresh) const {
  const auto& map = ctx_.map();
  const double radius = constants_.stop_sign_radius;
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    if (!c.lanes[i]) return false;
    const auto& lane_id = map.lanes()[*c.lanes[i]].id;
    const Vec2 p = c.centroids[i];
    for (const auto& sign : map.stop_signs()) {
      const auto& ids = sign.controlled_lane_ids;
      if (std::find(ids.begin(), ids.end(), lane_id) == ids.end()) continue;
      const Vec2 d = p - sign.position;
      if (d.norm() > radius) continue;
      const double ahead = d.dot(heading_vector(sign.facing_yaw));
      if (ahead >= 0.0 && ahead <= forward_thresh) return true;
    }
    return false;
  });
}

ScenarioSet Engine::in_drivable_area(const ScenarioSet& candidates) const {
  const auto& layer = ctx_.map().drivable_layer();
  return run_unary(ctx_, candidates, parallel_, [&](const TrackCache& c, std::size_t i) {
    return distance_to_layer(c.centroids[i], layer) == 0.0;
  });
}

ScenarioSet Engine::on_road(const ScenarioSet& candidates) const {
  return run_unary(ctx_, candidates, false,
                   [](const TrackCache& c, std::size_t i) { return c.lanes[i].has_value(); });
}

ScenarioSet Engine::in_same_lane(const ScenarioSet& candidates, const ScenarioSet& related) const {
  const auto& map = ctx_.map();
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          const auto& lane = c.lanes[i];
                          if (!lane) return false;
                          for (const auto& o : objs) {
                            if (o.cache == &c) continue;
                            const auto& olane = o.cache->lanes[o.box];
                            if (olane && map.lanes_connected(*lane, *olane)) rel.push_back(o.id);
                          }
                          return !rel.empty();
                        });
}

ScenarioSet Engine::on_relative_side_of_road(const ScenarioSet& candidates, const ScenarioSet& related,
                                             RoadSide side) const {
  const auto& map = ctx_.map();
  const double search = constants_.side_lane_search;
  auto lane_dir = [&](const TrackCache& c, std::size_t i) -> std::optional<Vec2> {
    auto lane = c.lanes[i] ? c.lanes[i] : map.nearest_lane_index(c.centroids[i], search);
    if (!lane) return std::nullopt;
    return map.lane_direction_at(*lane, c.centroids[i]);
  };
  return run_relational(ctx_, candidates, related, parallel_,
                        [&](const TrackCache& c, std::size_t i, const std::vector<RelatedObj>& objs, auto& rel) {
                          const auto mine = lane_dir(c, i);
                          if (!mine) return false;
                          for (const auto& o : objs) {
                            if (o.cache == &c) continue;
                            const auto theirs = lane_dir(*o.cache, o.box);
                            if (!theirs) continue;
                            const bool same = mine->dot(*theirs) > kGeomEps;
                            if (same == (side == RoadSide::same)) rel.push_back(o.id);
                          }
                          return !rel.empty();
                        });
}

ScenarioSet Engine::is_color(const ScenarioSet& candidates, std::string_view color) const {
  if (!is_supported_color(color)) return candidates;
  const auto& table = ctx_.bundle().colors;
  return run_unary(ctx_, candidates, false, [&](const TrackCache& c, std::size_t) {
    auto it = table.find(c.track->id);
    return it != table.end() && it->second == color;
  });
}

}  // namespace refmine
