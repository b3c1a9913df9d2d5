#include "refmine/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>
#include <tuple>

namespace refmine {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = 1e-9;
// Slack on geometric thresholds and half-planes so exact ties do not depend on the frame.
constexpr double kTie = 1e-9;

double wrap(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

double len(double x, double y) { return std::hypot(x, y); }

double angle_of(double ax, double ay, double bx, double by) {
  return std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by);
}

// Polygon helpers written against raw coordinates.

bool near_edge(double px, double py, const Vec2& a, const Vec2& b) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const double scale = std::max(1.0, len(ex, ey));
  if (std::abs(ex * (py - a.y) - ey * (px - a.x)) > 1e-12 * scale) return false;
  return px >= std::min(a.x, b.x) - 1e-12 && px <= std::max(a.x, b.x) + 1e-12 && py >= std::min(a.y, b.y) - 1e-12 &&
         py <= std::max(a.y, b.y) + 1e-12;
}

bool inside(double px, double py, const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return false;
  int crossings = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[(i + poly.size() - 1) % poly.size()];
    const Vec2& b = poly[i];
    if (near_edge(px, py, a, b)) return true;
    if ((b.y > py) != (a.y > py)) {
      const double xc = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
      if (px < xc) ++crossings;
    }
  }
  return crossings % 2 == 1;
}

double seg_dist(double px, double py, const Vec2& a, const Vec2& b) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const double l2 = ex * ex + ey * ey;
  double s = l2 > 0.0 ? ((px - a.x) * ex + (py - a.y) * ey) / l2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return len(px - (a.x + ex * s), py - (a.y + ey * s));
}

double boundary_dist(double px, double py, const std::vector<Vec2>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, seg_dist(px, py, poly[(i + poly.size() - 1) % poly.size()], poly[i]));
  }
  return best;
}

double layer_dist(double px, double py, const std::vector<const std::vector<Vec2>*>& polys) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto* p : polys) best = std::min(best, inside(px, py, *p) ? 0.0 : boundary_dist(px, py, *p));
  return best;
}

struct Projection {
  double s = 0.0;
  double d = std::numeric_limits<double>::infinity();
};

Projection project(double px, double py, const std::vector<Vec2>& line) {
  Projection best;
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double ex = line[i].x - line[i - 1].x;
    const double ey = line[i].y - line[i - 1].y;
    const double l2 = ex * ex + ey * ey;
    const double l = std::sqrt(l2);
    const double f = l2 > 0.0 ? std::clamp(((px - line[i - 1].x) * ex + (py - line[i - 1].y) * ey) / l2, 0.0, 1.0) : 0.0;
    const double d = len(px - (line[i - 1].x + ex * f), py - (line[i - 1].y + ey * f));
    if (d < best.d) best = {walked + f * l, d};
    walked += l;
  }
  return best;
}

Vec2 normalized(double x, double y) {
  const double n = len(x, y);
  if (!(n > 0.0)) return {1.0, 0.0};
  const double k = 1.0 / n;
  return {x * k, y * k};
}

/// Unit centerline direction at the projection of p, interpolated between the
/// bisector tangents of the two enclosing vertices.
Vec2 direction_at(const LaneSegment& lane, double px, double py) {
  const auto& c = lane.centerline;
  const std::size_t n = c.size();
  std::vector<Vec2> tan(n);
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) cum[i] = cum[i - 1] + len(c[i].x - c[i - 1].x, c[i].y - c[i - 1].y);
  tan[0] = normalized(c[1].x - c[0].x, c[1].y - c[0].y);
  tan[n - 1] = normalized(c[n - 1].x - c[n - 2].x, c[n - 1].y - c[n - 2].y);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 a = normalized(c[i].x - c[i - 1].x, c[i].y - c[i - 1].y);
    const Vec2 b = normalized(c[i + 1].x - c[i].x, c[i + 1].y - c[i].y);
    tan[i] = normalized(a.x + b.x, a.y + b.y);
  }
  const double s = std::clamp(project(px, py, c).s, 0.0, cum.back());
  std::size_t k = 1;
  while (k < n - 1 && cum[k] <= s) ++k;
  const double seg = cum[k] - cum[k - 1];
  const double f = seg > 0.0 ? (s - cum[k - 1]) / seg : 0.0;
  return normalized(tan[k - 1].x * (1.0 - f) + tan[k].x * f, tan[k - 1].y * (1.0 - f) + tan[k].y * f);
}

std::optional<std::size_t> nearest_lane(const HDMap& map, double px, double py, double max_distance) {
  if (auto in = oracle_assign_lane(map, px, py)) return in;
  std::optional<std::size_t> best;
  double best_d = max_distance;
  const auto& lanes = map.lanes();
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const double d = boundary_dist(px, py, lanes[i].polygon);
    if (d <= max_distance + kTie && (!best || d < best_d - kEps)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

bool connected(const HDMap& map, std::size_t a, std::size_t b) {
  if (a == b) return true;
  const auto& la = map.lanes()[a];
  const auto& lb = map.lanes()[b];
  return std::count(la.successors.begin(), la.successors.end(), lb.id) > 0 ||
         std::count(lb.successors.begin(), lb.successors.end(), la.id) > 0;
}

/// Per-box motion estimate: centered moving average of positions with a
/// shrinking window at the ends, then central differences.
std::vector<OracleBackend::Sample> motion(const Track& track) {
  const std::size_t n = track.boxes.size();
  std::vector<OracleBackend::Sample> out(n);
  std::vector<double> yaw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = track.boxes[i];
    out[i].x = b.translation.x;
    out[i].y = b.translation.y;
    out[i].yaw = b.yaw;
    out[i].length = b.size.x;
    out[i].width = b.size.y;
    yaw[i] = i == 0 ? b.yaw : yaw[i - 1] + wrap(b.yaw - wrap(yaw[i - 1]));
    out[i].yaw_unwrapped = yaw[i];
  }
  if (n < 2) return out;

  std::vector<double> gaps;
  for (std::size_t i = 1; i < n; ++i) {
    gaps.push_back(static_cast<double>(track.boxes[i].timestamp - track.boxes[i - 1].timestamp) / 1e9);
  }
  std::sort(gaps.begin(), gaps.end());
  const double period = gaps[gaps.size() / 2];
  long width = 1;
  if (period > 0.0) width = std::max(1L, std::lround(0.5 / period));
  if (width % 2 == 0) ++width;
  const auto half = static_cast<std::size_t>(width / 2);

  std::vector<double> t(n), sx(n), sy(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<double>(track.boxes[i].timestamp - track.boxes[0].timestamp) / 1e9;
    const std::size_t h = std::min(half, std::min(i, n - 1 - i));
    double ax = 0.0, ay = 0.0;
    for (std::size_t k = i - h; k <= i + h; ++k) {
      ax += track.boxes[k].translation.x;
      ay += track.boxes[k].translation.y;
    }
    const double w = 1.0 / static_cast<double>(2 * h + 1);
    sx[i] = ax * w;
    sy[i] = ay * w;
  }
  auto deriv = [&](const std::vector<double>& v) {
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
      d[i] = (v[hi] - v[lo]) * (1.0 / (t[hi] - t[lo]));
    }
    return d;
  };
  const auto vx = deriv(sx);
  const auto vy = deriv(sy);
  const auto ax = deriv(vx);
  const auto ay = deriv(vy);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(out[i].yaw);
    const double s = std::sin(out[i].yaw);
    out[i].vx = vx[i];
    out[i].vy = vy[i];
    out[i].a_fwd = ax[i] * c + ay[i] * s;
    out[i].a_lat = ax[i] * -s + ay[i] * c;
  }
  return out;
}

double speed(const OracleBackend::Sample& s) { return len(s.vx, s.vy); }

/// Offset of q in the box frame of s (x forward, y left).
std::pair<double, double> local(const OracleBackend::Sample& s, const OracleBackend::Sample& q) {
  const double c = std::cos(s.yaw);
  const double n = std::sin(s.yaw);
  const double dx = q.x - s.x;
  const double dy = q.y - s.y;
  return {c * dx + n * dy, -n * dx + c * dy};
}

std::size_t at_least(double v) {
  if (!(v < 1e18)) return std::numeric_limits<std::size_t>::max();
  return v <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(v));
}

std::size_t at_most(double v) {
  if (!(v < 1e18)) return std::numeric_limits<std::size_t>::max();
  return v <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(v));
}

std::int64_t nanos(double s) { return static_cast<std::int64_t>(std::llround(s * 1e9)); }

// Divide before scaling so that 180 degrees maps to exactly pi.
constexpr double deg_to_rad(double d) { return d / 180.0 * kPi; }
constexpr double rad_to_deg(double r) { return r / kPi * 180.0; }

}  // namespace

std::optional<std::size_t> oracle_assign_lane(const HDMap& map, double x, double y) {
  std::optional<std::size_t> best;
  double best_d = 0.0;
  const auto& lanes = map.lanes();
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (!inside(x, y, lanes[i].polygon)) continue;
    const double d = project(x, y, lanes[i].centerline).d;
    if (!best || d < best_d - kEps) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

OracleBackend::OracleBackend(const LogBundle& bundle, EngineConstants constants) : bundle_(bundle), k_(constants) {
  for (const auto& track : bundle.tracks) {
    Object obj;
    obj.track = &track;
    auto samples = motion(track);
    for (std::size_t i = 0; i < track.boxes.size(); ++i) {
      auto lane = oracle_assign_lane(bundle.map, samples[i].x, samples[i].y);
      samples[i].lane = lane ? static_cast<int>(*lane) : -1;
      obj.samples.emplace(track.boxes[i].timestamp, samples[i]);
    }
    objects_.emplace(track.id, std::move(obj));
  }
}

const OracleBackend::Object* OracleBackend::object(const std::string& id) const {
  auto it = objects_.find(id);
  return it == objects_.end() ? nullptr : &it->second;
}

namespace {

using Object = OracleBackend::Object;
using Sample = OracleBackend::Sample;

struct Present {
  std::string id;
  const Object* obj;
  const Sample* s;
};

/// Related objects present at t: listed in the related set at t and boxed at t.
std::vector<Present> present_at(const std::map<std::string, Object, std::less<>>& objects, const ScenarioSet& related,
                                Timestamp t) {
  std::vector<Present> out;
  for (const auto& [id, e] : related) {
    if (!e.timestamps.contains(t)) continue;
    auto it = objects.find(id);
    if (it == objects.end()) continue;
    auto s = it->second.samples.find(t);
    if (s == it->second.samples.end()) continue;
    out.push_back({id, &it->second, &s->second});
  }
  return out;
}

/// Adds every candidate relationship whose timestamp survived in `out`.
void carry(ScenarioSet& out, const ScenarioSet& candidates) {
  std::vector<std::tuple<std::string, std::string, Timestamp>> add;
  for (const auto& [id, e] : out) {
    const auto* c = candidates.find(id);
    if (c == nullptr) continue;
    for (const auto& [r, ts] : c->related) {
      for (Timestamp t : ts) {
        if (e.timestamps.contains(t)) add.emplace_back(id, r, t);
      }
    }
  }
  for (const auto& [id, r, t] : add) out.add_relationship(id, r, t);
}

/// Candidate (id, t, object, sample) tuples with a box at t.
template <typename F>
void each_candidate(const std::map<std::string, Object, std::less<>>& objects, const ScenarioSet& candidates, F f) {
  for (const auto& [id, e] : candidates) {
    auto it = objects.find(id);
    if (it == objects.end()) continue;
    for (Timestamp t : e.timestamps) {
      auto s = it->second.samples.find(t);
      if (s != it->second.samples.end()) f(id, t, it->second, s->second);
    }
  }
}

}  // namespace

template <typename Keep>
ScenarioSet OracleBackend::filter(const ScenarioSet& candidates, Keep keep) const {
  ScenarioSet out;
  each_candidate(objects_, candidates, [&](const std::string& id, Timestamp t, const Object& o, const Sample& s) {
    if (keep(o, t, s)) out.add(id, t);
  });
  carry(out, candidates);
  return out;
}

namespace {

/// Runs a relational test: `pick` returns the related ids recorded at (id, t);
/// a non-empty list, or `keep_empty` set by pick, keeps the pair.
template <typename Pick>
ScenarioSet relate(const std::map<std::string, Object, std::less<>>& objects, const ScenarioSet& candidates,
                   const ScenarioSet& related, Pick pick) {
  ScenarioSet out;
  each_candidate(objects, candidates, [&](const std::string& id, Timestamp t, const Object& o, const Sample& s) {
    bool keep = false;
    const auto ids = pick(id, o, s, present_at(objects, related, t), keep);
    if (ids.empty() && !keep) return;
    out.add(id, t);
    for (const auto& r : ids) out.add_relationship(id, r, t);
  });
  carry(out, candidates);
  return out;
}

}  // namespace

ScenarioSet OracleBackend::get_objects_of_category(std::string_view category) const {
  const auto cats = expand_category(category);
  ScenarioSet out;
  for (const auto& [id, o] : objects_) {
    if (std::count(cats.begin(), cats.end(), o.track->category) == 0) continue;
    for (const auto& [t, s] : o.samples) out.add(id, t);
  }
  return out;
}

ScenarioSet OracleBackend::is_category(const ScenarioSet& candidates, std::string_view category) const {
  const auto cats = expand_category(category);
  return filter(candidates, [&](const Object& o, Timestamp, const Sample&) {
    return std::count(cats.begin(), cats.end(), o.track->category) > 0;
  });
}

ScenarioSet OracleBackend::has_velocity(const ScenarioSet& candidates, double lo, double hi) const {
  check_range("has_velocity", lo, hi);
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) {
    const double v = speed(s);
    return v >= lo && v <= hi;
  });
}

ScenarioSet OracleBackend::stationary(const ScenarioSet& candidates) const {
  return filter(candidates, [&](const Object& o, Timestamp, const Sample&) {
    for (const auto& [ta, a] : o.samples) {
      for (const auto& [tb, b] : o.samples) {
        if (tb > ta && len(b.x - a.x, b.y - a.y) >= k_.stationary_displacement) return false;
      }
    }
    return true;
  });
}

ScenarioSet OracleBackend::accelerating(const ScenarioSet& candidates, double lo, double hi) const {
  check_range("accelerating", lo, hi);
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) { return s.a_fwd >= lo && s.a_fwd <= hi; });
}

ScenarioSet OracleBackend::has_lateral_acceleration(const ScenarioSet& candidates, double lo, double hi) const {
  check_range("has_lateral_acceleration", lo, hi);
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) { return s.a_lat >= lo && s.a_lat <= hi; });
}

ScenarioSet OracleBackend::turning(const ScenarioSet& candidates, TurnDirection direction) const {
  const std::int64_t window = nanos(k_.turn_window_s);
  const double th = k_.turn_threshold_rad;
  return filter(candidates, [&](const Object& o, Timestamp t, const Sample&) {
    // Some window [a, b] containing t, at most `window` long, turns past the threshold.
    for (auto a = o.samples.begin(); a != o.samples.end() && a->first <= t; ++a) {
      for (auto b = o.samples.lower_bound(t); b != o.samples.end(); ++b) {
        if (b->first - a->first > window) break;
        if (b->first == a->first) continue;
        const double d = b->second.yaw_unwrapped - a->second.yaw_unwrapped;
        if (d > th && direction != TurnDirection::right) return true;
        if (d < -th && direction != TurnDirection::left) return true;
      }
    }
    return false;
  });
}

ScenarioSet OracleBackend::changing_lanes(const ScenarioSet& candidates, TurnDirection direction) const {
  const std::int64_t dil = nanos(k_.lane_change_dilation_s);
  const auto& lanes = bundle_.map.lanes();
  return filter(candidates, [&](const Object& o, Timestamp t, const Sample&) {
    const Sample* prev = nullptr;
    for (const auto& [ts, s] : o.samples) {
      if (prev != nullptr && prev->lane >= 0 && s.lane >= 0 && prev->lane != s.lane &&
          std::llabs(ts - t) <= dil) {
        const auto& from = lanes[static_cast<std::size_t>(prev->lane)];
        const auto& to = lanes[static_cast<std::size_t>(s.lane)].id;
        const bool left = from.left_neighbor == to;
        const bool right = from.right_neighbor == to;
        if ((left && direction != TurnDirection::right) || (right && direction != TurnDirection::left)) return true;
      }
      prev = &s;
    }
    return false;
  });
}

ScenarioSet OracleBackend::facing_toward(const ScenarioSet& candidates, const ScenarioSet& related,
                                         double within_angle, double max_distance) const {
  check_angle("facing_toward", within_angle);
  const double lim = deg_to_rad(within_angle);
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel, bool&) {
                  std::vector<std::string> ids;
                  for (const auto& r : rel) {
                    if (r.id == id) continue;
                    const double dx = r.s->x - s.x;
                    const double dy = r.s->y - s.y;
                    const double d = len(dx, dy);
                    if (d > 0.0 && d <= max_distance && angle_of(std::cos(s.yaw), std::sin(s.yaw), dx, dy) <= lim) {
                      ids.push_back(r.id);
                    }
                  }
                  return ids;
                });
}

ScenarioSet OracleBackend::heading_toward(const ScenarioSet& candidates, const ScenarioSet& related,
                                          double angle_threshold, double minimum_speed, double max_distance) const {
  check_angle("heading_toward", angle_threshold);
  const double lim = deg_to_rad(angle_threshold);
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel, bool&) {
                  std::vector<std::string> ids;
                  if (!(speed(s) > 0.0)) return ids;
                  for (const auto& r : rel) {
                    if (r.id == id) continue;
                    const double dx = r.s->x - s.x;
                    const double dy = r.s->y - s.y;
                    const double d = len(dx, dy);
                    if (!(d > 0.0) || d > max_distance) continue;
                    const double closing = (s.vx * dx + s.vy * dy) / d;
                    if (angle_of(s.vx, s.vy, dx, dy) <= lim && closing >= minimum_speed) ids.push_back(r.id);
                  }
                  return ids;
                });
}

ScenarioSet OracleBackend::heading_in_relative_direction_to(const ScenarioSet& candidates, const ScenarioSet& related,
                                                            RelativeHeading direction) const {
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel, bool&) {
                  std::vector<std::string> ids;
                  if (speed(s) < k_.moving_speed) return ids;
                  for (const auto& r : rel) {
                    if (r.id == id || speed(*r.s) < k_.moving_speed) continue;
                    const double deg = rad_to_deg(angle_of(s.vx, s.vy, r.s->vx, r.s->vy));
                    bool hit = false;
                    switch (direction) {
                      case RelativeHeading::same: hit = deg < 45.0; break;
                      case RelativeHeading::perpendicular: hit = deg >= 45.0 && deg < 135.0; break;
                      case RelativeHeading::opposite: hit = deg >= 135.0; break;
                    }
                    if (hit) ids.push_back(r.id);
                  }
                  return ids;
                });
}

namespace {

/// Related ids in the given direction of s, nearest first (ties by id).
std::vector<std::string> in_direction(const std::string& id, const Sample& s, const std::vector<Present>& rel,
                                      Direction direction, double within, double lateral_thresh) {
  std::vector<std::pair<double, std::string>> found;
  for (const auto& r : rel) {
    if (r.id == id) continue;
    const auto [fx, ly] = local(s, *r.s);
    double ahead = 0.0;
    double side = 0.0;
    bool ok = false;
    if (direction == Direction::forward) {
      ok = fx > kTie;
      ahead = fx - s.length / 2.0;
      side = std::abs(ly) - s.width / 2.0;
    } else if (direction == Direction::backward) {
      ok = fx < -kTie;
      ahead = -fx - s.length / 2.0;
      side = std::abs(ly) - s.width / 2.0;
    } else if (direction == Direction::left) {
      ok = ly > kTie;
      ahead = ly - s.width / 2.0;
      side = std::abs(fx) - s.length / 2.0;
    } else {
      ok = ly < -kTie;
      ahead = -ly - s.width / 2.0;
      side = std::abs(fx) - s.length / 2.0;
    }
    if (ok && ahead <= within + kTie && side <= lateral_thresh + kTie) found.emplace_back(len(r.s->x - s.x, r.s->y - s.y), r.id);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> ids;
  for (auto& f : found) ids.push_back(std::move(f.second));
  return ids;
}

}  // namespace

ScenarioSet OracleBackend::has_objects_in_relative_direction(const ScenarioSet& candidates,
                                                             const ScenarioSet& related, Direction direction,
                                                             double min_number, double max_number,
                                                             double within_distance, double lateral_thresh) const {
  const std::size_t lo = at_least(min_number);
  const std::size_t hi = at_most(max_number);
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel,
                    bool& keep) {
                  auto ids = in_direction(id, s, rel, direction, within_distance, lateral_thresh);
                  if (ids.size() < lo) return std::vector<std::string>{};
                  keep = true;
                  if (ids.size() > hi) ids.resize(hi);
                  return ids;
                });
}

ScenarioSet OracleBackend::get_objects_in_relative_direction(const ScenarioSet& candidates,
                                                             const ScenarioSet& related, Direction direction,
                                                             double min_number, double max_number,
                                                             double within_distance, double lateral_thresh) const {
  const std::size_t lo = at_least(min_number);
  const std::size_t hi = at_most(max_number);
  ScenarioSet out;
  each_candidate(objects_, candidates, [&](const std::string& id, Timestamp t, const Object&, const Sample& s) {
    auto ids = in_direction(id, s, present_at(objects_, related, t), direction, within_distance, lateral_thresh);
    if (ids.empty() || ids.size() < lo) return;
    for (std::size_t j = 0; j < ids.size() && j < hi; ++j) out.add_relationship(ids[j], id, t);
  });
  return out;
}

ScenarioSet OracleBackend::being_crossed_by(const ScenarioSet& candidates, const ScenarioSet& related,
                                            Direction direction, CrossingSense in_direction_sense,
                                            double forward_thresh, double lateral_thresh) const {
  ScenarioSet out;
  for (const auto& [cid, ce] : candidates) {
    const Object* c = object(cid);
    if (c == nullptr) continue;
    for (const auto& [rid, re] : related) {
      const Object* r = object(rid);
      if (r == nullptr || rid == cid) continue;
      // Shared observations where the related object is listed.
      struct Step {
        Timestamp t;
        double axial, lateral, half;
      };
      std::vector<Step> steps;
      for (const auto& [t, cs] : c->samples) {
        auto rs = r->samples.find(t);
        if (rs == r->samples.end() || !re.timestamps.contains(t)) continue;
        const auto [fx, ly] = local(cs, rs->second);
        Step st{t, 0, 0, 0};
        switch (direction) {
          case Direction::forward: st = {t, fx, ly, cs.length / 2.0}; break;
          case Direction::backward: st = {t, -fx, -ly, cs.length / 2.0}; break;
          case Direction::left: st = {t, ly, -fx, cs.width / 2.0}; break;
          case Direction::right: st = {t, -ly, fx, cs.width / 2.0}; break;
        }
        steps.push_back(st);
      }
      // Side of the midline; points within kTie of it are on neither side.
      auto sign = [](double v) { return v > kTie ? 1 : (v < -kTie ? -1 : 0); };
      int last = steps.empty() ? 0 : sign(steps[0].lateral);
      for (std::size_t i = 1; i < steps.size(); ++i) {
        const int now = sign(steps[i].lateral);
        if (now == 0) continue;
        const int before = last;
        last = now;
        if (before == 0 || before == now) continue;
        if (steps[i].axial < steps[i].half - kTie || steps[i].axial > steps[i].half + forward_thresh + kTie) continue;
        const bool ccw = now > 0;
        if (in_direction_sense == CrossingSense::counterclockwise && !ccw) continue;
        if (in_direction_sense == CrossingSense::clockwise && ccw) continue;
        // The crossing step, then following steps while still laterally close.
        for (std::size_t j = i; j < steps.size(); ++j) {
          if (j > i && std::abs(steps[j].lateral) > lateral_thresh + kTie) break;
          if (ce.timestamps.contains(steps[j].t)) out.add_relationship(cid, rid, steps[j].t);
        }
      }
    }
  }
  carry(out, candidates);
  return out;
}

ScenarioSet OracleBackend::near_objects(const ScenarioSet& candidates, const ScenarioSet& related,
                                        double distance_thresh, double min_objects, bool include_self) const {
  const std::size_t lo = at_least(min_objects);
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel,
                    bool& keep) {
                  std::vector<std::string> ids;
                  for (const auto& r : rel) {
                    if (r.id == id && !include_self) continue;
                    if (len(r.s->x - s.x, r.s->y - s.y) <= distance_thresh) ids.push_back(r.id);
                  }
                  if (ids.size() < lo) return std::vector<std::string>{};
                  keep = true;
                  return ids;
                });
}

ScenarioSet OracleBackend::following(const ScenarioSet& candidates, const ScenarioSet& related) const {
  const double lim = deg_to_rad(k_.following_max_angle_deg);
  const auto& map = bundle_.map;
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel, bool&) {
                  std::vector<std::string> ids;
                  if (s.lane < 0 || speed(s) < k_.moving_speed) return ids;
                  const auto lane = static_cast<std::size_t>(s.lane);
                  const Vec2 dir = direction_at(map.lanes()[lane], s.x, s.y);
                  for (const auto& r : rel) {
                    if (r.id == id || r.s->lane < 0 || speed(*r.s) < k_.moving_speed) continue;
                    if (!connected(map, lane, static_cast<std::size_t>(r.s->lane))) continue;
                    if (angle_of(s.vx, s.vy, r.s->vx, r.s->vy) > lim) continue;
                    if ((r.s->x - s.x) * dir.x + (r.s->y - s.y) * dir.y > 0.0) ids.push_back(r.id);
                  }
                  return ids;
                });
}

ScenarioSet OracleBackend::at_pedestrian_crossing(const ScenarioSet& candidates, double within_distance) const {
  std::vector<const std::vector<Vec2>*> polys;
  for (const auto& c : bundle_.map.crossings()) polys.push_back(&c.polygon);
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) {
    return layer_dist(s.x, s.y, polys) <= within_distance + kTie;
  });
}

ScenarioSet OracleBackend::on_lane_type(const ScenarioSet& candidates, LaneType lane_type) const {
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) {
    return s.lane >= 0 && bundle_.map.lanes()[static_cast<std::size_t>(s.lane)].lane_type == lane_type;
  });
}

ScenarioSet OracleBackend::near_intersection(const ScenarioSet& candidates, double threshold) const {
  std::vector<const std::vector<Vec2>*> polys;
  for (const auto& l : bundle_.map.lanes()) {
    if (l.is_intersection) polys.push_back(&l.polygon);
  }
  return filter(candidates,
                [&](const Object&, Timestamp, const Sample& s) { return layer_dist(s.x, s.y, polys) <= threshold + kTie; });
}

ScenarioSet OracleBackend::on_intersection(const ScenarioSet& candidates) const {
  return near_intersection(candidates, 0.0);
}

ScenarioSet OracleBackend::at_stop_sign(const ScenarioSet& candidates, double forward_thresh) const {
  const auto& map = bundle_.map;
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) {
    if (s.lane < 0) return false;
    const auto& lane = map.lanes()[static_cast<std::size_t>(s.lane)].id;
    for (const auto& sign : map.stop_signs()) {
      if (std::count(sign.controlled_lane_ids.begin(), sign.controlled_lane_ids.end(), lane) == 0) continue;
      const double dx = s.x - sign.position.x;
      const double dy = s.y - sign.position.y;
      if (len(dx, dy) > k_.stop_sign_radius) continue;
      const double ahead = dx * std::cos(sign.facing_yaw) + dy * std::sin(sign.facing_yaw);
      if (ahead >= 0.0 && ahead <= forward_thresh) return true;
    }
    return false;
  });
}

ScenarioSet OracleBackend::in_drivable_area(const ScenarioSet& candidates) const {
  std::vector<const std::vector<Vec2>*> polys;
  for (const auto& p : bundle_.map.drivable().polygons) polys.push_back(&p);
  return filter(candidates, [&](const Object&, Timestamp, const Sample& s) { return layer_dist(s.x, s.y, polys) == 0.0; });
}

ScenarioSet OracleBackend::on_road(const ScenarioSet& candidates) const {
  return filter(candidates, [](const Object&, Timestamp, const Sample& s) { return s.lane >= 0; });
}

ScenarioSet OracleBackend::in_same_lane(const ScenarioSet& candidates, const ScenarioSet& related) const {
  const auto& map = bundle_.map;
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel, bool&) {
                  std::vector<std::string> ids;
                  if (s.lane < 0) return ids;
                  for (const auto& r : rel) {
                    if (r.id == id || r.s->lane < 0) continue;
                    if (connected(map, static_cast<std::size_t>(s.lane), static_cast<std::size_t>(r.s->lane))) {
                      ids.push_back(r.id);
                    }
                  }
                  return ids;
                });
}

ScenarioSet OracleBackend::on_relative_side_of_road(const ScenarioSet& candidates, const ScenarioSet& related,
                                                    RoadSide side) const {
  const auto& map = bundle_.map;
  auto dir = [&](const Sample& s) -> std::optional<Vec2> {
    std::optional<std::size_t> lane;
    if (s.lane >= 0) {
      lane = static_cast<std::size_t>(s.lane);
    } else {
      lane = nearest_lane(map, s.x, s.y, k_.side_lane_search);
    }
    if (!lane) return std::nullopt;
    return direction_at(map.lanes()[*lane], s.x, s.y);
  };
  return relate(objects_, candidates, related,
                [&](const std::string& id, const Object&, const Sample& s, const std::vector<Present>& rel, bool&) {
                  std::vector<std::string> ids;
                  const auto mine = dir(s);
                  if (!mine) return ids;
                  for (const auto& r : rel) {
                    if (r.id == id) continue;
                    const auto theirs = dir(*r.s);
                    if (!theirs) continue;
                    const bool same = mine->x * theirs->x + mine->y * theirs->y > kTie;
                    if (same == (side == RoadSide::same)) ids.push_back(r.id);
                  }
                  return ids;
                });
}

ScenarioSet OracleBackend::is_color(const ScenarioSet& candidates, std::string_view color) const {
  if (!is_supported_color(color)) return candidates;
  return filter(candidates, [&](const Object& o, Timestamp, const Sample&) {
    auto it = bundle_.colors.find(o.track->id);
    return it != bundle_.colors.end() && it->second == color;
  });
}

namespace {

using Pair = std::pair<std::string, Timestamp>;
using Triple = std::tuple<std::string, std::string, Timestamp>;

void explode(const ScenarioSet& s, std::set<Pair>& pairs, std::set<Triple>& triples) {
  for (const auto& [id, e] : s) {
    for (Timestamp t : e.timestamps) pairs.emplace(id, t);
    for (const auto& [r, ts] : e.related) {
      for (Timestamp t : ts) triples.emplace(id, r, t);
    }
  }
}

ScenarioSet assemble(const std::set<Pair>& pairs, const std::set<Triple>& triples) {
  ScenarioSet out;
  for (const auto& [id, t] : pairs) out.add(id, t);
  for (const auto& [id, r, t] : triples) {
    if (pairs.count({id, t}) > 0) out.add_relationship(id, r, t);
  }
  return out;
}

}  // namespace

ScenarioSet oracle_and(const std::vector<ScenarioSet>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("scenario_and: empty input list");
  std::set<Pair> common;
  std::set<Triple> rel;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::set<Pair> pairs;
    explode(inputs[i], pairs, rel);
    if (i == 0) {
      common = std::move(pairs);
      continue;
    }
    std::set<Pair> keep;
    for (const auto& p : common) {
      if (pairs.count(p) > 0) keep.insert(p);
    }
    common = std::move(keep);
  }
  return assemble(common, rel);
}

ScenarioSet oracle_or(const std::vector<ScenarioSet>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("scenario_or: empty input list");
  std::set<Pair> pairs;
  std::set<Triple> rel;
  for (const auto& in : inputs) explode(in, pairs, rel);
  for (const auto& [id, r, t] : rel) pairs.emplace(id, t);
  return assemble(pairs, rel);
}

}  // namespace refmine
