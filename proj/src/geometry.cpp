#include "refmine/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace refmine {

Aabb bounding_box(std::span<const Vec2> pts) {
  Aabb box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double s = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (p - (a + ab * s)).norm();
}

namespace {

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
  constexpr double eps = 1e-12;
  const Vec2 ab = b - a;
  const double scale = std::max(1.0, ab.norm());
  if (std::abs(ab.cross(p - a)) > eps * scale) return false;
  return p.x >= std::min(a.x, b.x) - eps && p.x <= std::max(a.x, b.x) + eps &&
         p.y >= std::min(a.y, b.y) - eps && p.y <= std::max(a.y, b.y) + eps;
}

}  // namespace

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    if (on_segment(p, a, b)) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_boundary(Vec2 p, std::span<const Vec2> poly) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
  }
  return best;
}

double distance_to_polygon(Vec2 p, std::span<const Vec2> poly) {
  if (point_in_polygon(p, poly)) return 0.0;
  return distance_to_boundary(p, poly);
}

double polygon_area(std::span<const Vec2> poly) {
  double a = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) a += poly[j].cross(poly[i]);
  return 0.5 * a;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = (b - a).cross(c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

}  // namespace

bool is_simple_polygon(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = poly[i];
    const Vec2 a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (segments_intersect(a1, a2, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

double polyline_length(std::span<const Vec2> line) {
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) len += (line[i] - line[i - 1]).norm();
  return len;
}

Polyline resample_uniform(std::span<const Vec2> line, std::size_t count) {
  if (line.size() < 2 || count < 2) throw std::invalid_argument("resample_uniform: need >= 2 points");
  std::vector<double> cum(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) cum[i] = cum[i - 1] + (line[i] - line[i - 1]).norm();
  const double total = cum.back();

  Polyline out;
  out.reserve(count);
  std::size_t seg = 1;
  for (std::size_t k = 0; k < count; ++k) {
    if (k == count - 1) {
      out.push_back(line.back());
      break;
    }
    const double s = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (seg < line.size() - 1 && cum[seg] < s) ++seg;
    const double seg_len = cum[seg] - cum[seg - 1];
    const double f = seg_len > 0.0 ? (s - cum[seg - 1]) / seg_len : 0.0;
    out.push_back(line[seg - 1] + (line[seg] - line[seg - 1]) * f);
  }
  return out;
}

PolylineProjection project_onto_polyline(Vec2 p, std::span<const Vec2> line) {
  PolylineProjection best{0.0, std::numeric_limits<double>::infinity(), line.empty() ? p : line.front()};
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 a = line[i - 1];
    const Vec2 ab = line[i] - a;
    const double len2 = ab.dot(ab);
    const double len = std::sqrt(len2);
    double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + ab * s;
    const double d = (p - q).norm();
    if (d < best.distance) best = {walked + s * len, d, q};
    walked += len;
  }
  return best;
}

Polygon clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  Polygon output(subject.begin(), subject.end());
  const std::size_t n = clip.size();
  for (std::size_t i = 0; i < n && !output.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % n];
    const Vec2 edge = b - a;
    Polygon input;
    input.swap(output);
    for (std::size_t k = 0; k < input.size(); ++k) {
      const Vec2 cur = input[k];
      const Vec2 prev = input[(k + input.size() - 1) % input.size()];
      const double dc = edge.cross(cur - a);
      const double dp = edge.cross(prev - a);
      if (dc >= 0.0) {
        if (dp < 0.0) output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
        output.push_back(cur);
      } else if (dp >= 0.0) {
        output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
      }
    }
  }
  return output;
}

}  // namespace refmine
