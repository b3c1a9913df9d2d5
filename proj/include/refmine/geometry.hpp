#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace refmine {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Slack on geometric thresholds and half-planes so exact ties do not depend on the frame.
inline constexpr double kGeomEps = 1e-9;

inline Vec2 heading_vector(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }

/// Unsigned angle between two vectors in radians, in [0, pi].
inline double angle_between(Vec2 a, Vec2 b) { return std::atan2(std::abs(a.cross(b)), a.dot(b)); }

using Polyline = std::vector<Vec2>;
using Polygon = std::vector<Vec2>;  ///< implicitly closed

struct Aabb {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  bool contains(Vec2 p, double pad = 0.0) const {
    return p.x >= min_x - pad && p.x <= max_x + pad && p.y >= min_y - pad && p.y <= max_y + pad;
  }
  /// Lower bound on the distance from `p` to anything inside the box.
  double distance(Vec2 p) const {
    const double dx = std::max({min_x - p.x, 0.0, p.x - max_x});
    const double dy = std::max({min_y - p.y, 0.0, p.y - max_y});
    return std::hypot(dx, dy);
  }
};

Aabb bounding_box(std::span<const Vec2> pts);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

/// Closed point-in-polygon test: points on an edge count as inside.
bool point_in_polygon(Vec2 p, std::span<const Vec2> poly);

/// Distance from `p` to the polygon boundary.
double distance_to_boundary(Vec2 p, std::span<const Vec2> poly);

/// 0 when `p` is inside or on the polygon, otherwise distance to its boundary.
double distance_to_polygon(Vec2 p, std::span<const Vec2> poly);

double polygon_area(std::span<const Vec2> poly);  ///< signed, CCW positive

/// True if no two non-adjacent edges intersect.
bool is_simple_polygon(std::span<const Vec2> poly);

double polyline_length(std::span<const Vec2> line);

/// Resamples to `count` points spaced uniformly in arclength (count >= 2).
Polyline resample_uniform(std::span<const Vec2> line, std::size_t count);

struct PolylineProjection {
  double arclength = 0.0;
  double distance = 0.0;
  Vec2 point;
};

/// Closest point on the polyline; earliest segment wins ties.
PolylineProjection project_onto_polyline(Vec2 p, std::span<const Vec2> line);

/// Convex polygon clipping (Sutherland-Hodgman); both inputs CCW.
Polygon clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

}  // namespace refmine
