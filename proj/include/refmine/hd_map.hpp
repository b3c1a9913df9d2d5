#pragma once

#include "refmine/geometry.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace refmine {

enum class LaneType { VEHICLE, BUS, BIKE };

std::string_view to_string(LaneType t);
std::optional<LaneType> parse_lane_type(std::string_view s);

/// Sampling step of the derived centerline, meters.
inline constexpr double kCenterlineStep = 0.5;

struct LaneSegment {
  std::string id;
  LaneType lane_type = LaneType::VEHICLE;
  Polyline left_boundary;
  Polyline right_boundary;
  std::optional<std::string> left_neighbor;
  std::optional<std::string> right_neighbor;
  std::vector<std::string> successors;
  bool is_intersection = false;

  // Derived on map construction.
  Polyline centerline;
  Polygon polygon;  ///< left boundary followed by the reversed right boundary
  Aabb bounds;
  std::vector<double> centerline_arclength;
  std::vector<Vec2> vertex_tangents;
};

struct PedestrianCrossing {
  std::string id;
  Polygon polygon;
};

struct StopSign {
  std::string id;
  Vec2 position;
  double facing_yaw = 0.0;
  std::vector<std::string> controlled_lane_ids;
};

struct DrivableArea {
  std::vector<Polygon> polygons;
};

/// A set of polygons with cached bounds for nearest-distance queries.
struct PolygonLayer {
  std::vector<Polygon> polygons;
  std::vector<Aabb> bounds;

  PolygonLayer() = default;
  explicit PolygonLayer(std::vector<Polygon> polys);
  bool empty() const { return polygons.empty(); }
};

/// 0 inside or on any polygon, otherwise distance to the nearest boundary;
/// +infinity for an empty layer.
double distance_to_layer(Vec2 p, const PolygonLayer& layer);

/// Immutable HD map with a uniform-grid lane index built at construction.
class HDMap {
 public:
  HDMap() = default;
  HDMap(std::vector<LaneSegment> lanes, std::vector<PedestrianCrossing> crossings,
        std::vector<StopSign> stop_signs, DrivableArea drivable);

  static HDMap from_json(const nlohmann::json& doc);
  static HDMap load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<LaneSegment>& lanes() const { return lanes_; }
  const std::vector<PedestrianCrossing>& crossings() const { return crossings_; }
  const std::vector<StopSign>& stop_signs() const { return stop_signs_; }
  const DrivableArea& drivable() const { return drivable_; }

  const LaneSegment* lane(std::string_view id) const;
  std::optional<std::size_t> lane_index(std::string_view id) const;

  /// Lane whose polygon contains `p`; nearest centerline wins, then smallest id.
  std::optional<std::size_t> assign_lane_index(Vec2 p) const;
  std::optional<std::string> assign_lane(Vec2 p) const;

  /// Nearest lane polygon within `max_distance` (containing lanes first).
  std::optional<std::size_t> nearest_lane_index(Vec2 p, double max_distance) const;

  /// Unit tangent of the lane centerline at arclength `s` (clamped to the lane).
  /// Throws std::out_of_range for an unknown lane id.
  Vec2 lane_direction(std::string_view lane_id, double s) const;
  Vec2 lane_direction(std::size_t lane_idx, double s) const;
  /// Tangent at the projection of `p` onto the centerline.
  Vec2 lane_direction_at(std::size_t lane_idx, Vec2 p) const;

  /// True when `b` equals `a` or is one successor hop away in either direction.
  bool lanes_connected(std::size_t a, std::size_t b) const;

  const PolygonLayer& crossing_layer() const { return crossing_layer_; }
  const PolygonLayer& intersection_layer() const { return intersection_layer_; }
  const PolygonLayer& drivable_layer() const { return drivable_layer_; }

  /// Copy rotated by `theta` about the origin, then translated.
  HDMap transformed(double theta, Vec2 translation) const;

 private:
  void build();
  std::size_t cell_of(double x, double y) const;

  std::vector<LaneSegment> lanes_;
  std::vector<PedestrianCrossing> crossings_;
  std::vector<StopSign> stop_signs_;
  DrivableArea drivable_;

  std::unordered_map<std::string, std::size_t> lane_ids_;
  std::vector<std::vector<std::size_t>> successor_idx_;
  PolygonLayer crossing_layer_;
  PolygonLayer intersection_layer_;
  PolygonLayer drivable_layer_;

  Aabb extent_{};
  double cell_size_ = 10.0;
  std::size_t cols_ = 0;
  std::size_t rows_ = 0;
  std::vector<std::vector<std::size_t>> grid_;
};

}  // namespace refmine
