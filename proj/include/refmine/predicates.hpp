#pragma once

#include "refmine/log_context.hpp"
#include "refmine/scenario_set.hpp"

#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>

namespace refmine {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Direction { forward, backward, left, right };
enum class TurnDirection { left, right, either };
enum class RelativeHeading { same, opposite, perpendicular };
enum class CrossingSense { clockwise, counterclockwise, either };
enum class RoadSide { same, opposite };

std::optional<Direction> parse_direction(std::string_view s);
std::optional<TurnDirection> parse_turn_direction(std::string_view s);  ///< "left", "right"
std::optional<RelativeHeading> parse_relative_heading(std::string_view s);
std::optional<CrossingSense> parse_crossing_sense(std::string_view s);
std::optional<RoadSide> parse_road_side(std::string_view s);

/// Colors with a defined meaning for is_color; anything else is a pass-through.
bool is_supported_color(std::string_view color);

/// Tunable engine constants. Loaded from a key = value file.
struct EngineConstants {
  double turn_threshold_rad = 0.5235987755982988;  ///< pi/6
  double turn_window_s = 3.0;
  double lane_change_dilation_s = 0.5;
  double moving_speed = 0.5;           ///< m/s, gate for motion-direction predicates
  double stationary_displacement = 2.0;
  double following_max_angle_deg = 45.0;
  double stop_sign_radius = 15.0;
  double side_lane_search = 10.0;      ///< nearest-lane radius for off-lane objects

  static EngineConstants load(const std::filesystem::path& path);
};

/// The atomic predicate API. Every call is pure over one log. Candidate
/// arguments restrict the returned (id, t) pairs; relational predicates also
/// record relationships to qualifying related objects.
class PredicateBackend {
 public:
  virtual ~PredicateBackend() = default;

  virtual ScenarioSet get_objects_of_category(std::string_view category) const = 0;
  virtual ScenarioSet is_category(const ScenarioSet& candidates, std::string_view category) const = 0;
  virtual ScenarioSet has_velocity(const ScenarioSet& candidates, double min_velocity, double max_velocity) const = 0;
  virtual ScenarioSet stationary(const ScenarioSet& candidates) const = 0;
  virtual ScenarioSet accelerating(const ScenarioSet& candidates, double min_accel, double max_accel) const = 0;
  virtual ScenarioSet has_lateral_acceleration(const ScenarioSet& candidates, double min_accel,
                                               double max_accel) const = 0;
  virtual ScenarioSet turning(const ScenarioSet& candidates, TurnDirection direction) const = 0;
  virtual ScenarioSet changing_lanes(const ScenarioSet& candidates, TurnDirection direction) const = 0;
  virtual ScenarioSet facing_toward(const ScenarioSet& candidates, const ScenarioSet& related, double within_angle,
                                    double max_distance) const = 0;
  virtual ScenarioSet heading_toward(const ScenarioSet& candidates, const ScenarioSet& related,
                                     double angle_threshold, double minimum_speed, double max_distance) const = 0;
  virtual ScenarioSet heading_in_relative_direction_to(const ScenarioSet& candidates, const ScenarioSet& related,
                                                       RelativeHeading direction) const = 0;
  virtual ScenarioSet has_objects_in_relative_direction(const ScenarioSet& candidates, const ScenarioSet& related,
                                                        Direction direction, double min_number, double max_number,
                                                        double within_distance, double lateral_thresh) const = 0;
  virtual ScenarioSet get_objects_in_relative_direction(const ScenarioSet& candidates, const ScenarioSet& related,
                                                        Direction direction, double min_number, double max_number,
                                                        double within_distance, double lateral_thresh) const = 0;
  virtual ScenarioSet being_crossed_by(const ScenarioSet& candidates, const ScenarioSet& related, Direction direction,
                                       CrossingSense in_direction, double forward_thresh,
                                       double lateral_thresh) const = 0;
  virtual ScenarioSet near_objects(const ScenarioSet& candidates, const ScenarioSet& related, double distance_thresh,
                                   double min_objects, bool include_self) const = 0;
  virtual ScenarioSet following(const ScenarioSet& candidates, const ScenarioSet& related) const = 0;
  virtual ScenarioSet at_pedestrian_crossing(const ScenarioSet& candidates, double within_distance) const = 0;
  virtual ScenarioSet on_lane_type(const ScenarioSet& candidates, LaneType lane_type) const = 0;
  virtual ScenarioSet near_intersection(const ScenarioSet& candidates, double threshold) const = 0;
  virtual ScenarioSet on_intersection(const ScenarioSet& candidates) const = 0;
  virtual ScenarioSet at_stop_sign(const ScenarioSet& candidates, double forward_thresh) const = 0;
  virtual ScenarioSet in_drivable_area(const ScenarioSet& candidates) const = 0;
  virtual ScenarioSet on_road(const ScenarioSet& candidates) const = 0;
  virtual ScenarioSet in_same_lane(const ScenarioSet& candidates, const ScenarioSet& related) const = 0;
  virtual ScenarioSet on_relative_side_of_road(const ScenarioSet& candidates, const ScenarioSet& related,
                                               RoadSide side) const = 0;
  virtual ScenarioSet is_color(const ScenarioSet& candidates, std::string_view color) const = 0;
};

/// Shared argument checks; both backends throw the same errors.
void check_range(std::string_view what, double lo, double hi);
void check_angle(std::string_view what, double degrees);

/// Adds the candidates' existing relationships at the timestamps kept in `result`.
ScenarioSet carry_relationships(ScenarioSet result, const ScenarioSet& candidates);

/// Indexed, OpenMP-parallel predicate engine over one log.
class Engine final : public PredicateBackend {
 public:
  explicit Engine(const LogBundle& bundle, EngineConstants constants = {}, bool parallel = true);

  const LogContext& context() const { return ctx_; }
  const EngineConstants& constants() const { return constants_; }

  ScenarioSet get_objects_of_category(std::string_view category) const override;
  ScenarioSet is_category(const ScenarioSet& candidates, std::string_view category) const override;
  ScenarioSet has_velocity(const ScenarioSet& candidates, double min_velocity, double max_velocity) const override;
  ScenarioSet stationary(const ScenarioSet& candidates) const override;
  ScenarioSet accelerating(const ScenarioSet& candidates, double min_accel, double max_accel) const override;
  ScenarioSet has_lateral_acceleration(const ScenarioSet& candidates, double min_accel,
                                       double max_accel) const override;
  ScenarioSet turning(const ScenarioSet& candidates, TurnDirection direction) const override;
  ScenarioSet changing_lanes(const ScenarioSet& candidates, TurnDirection direction) const override;
  ScenarioSet facing_toward(const ScenarioSet& candidates, const ScenarioSet& related, double within_angle,
                            double max_distance) const override;
  ScenarioSet heading_toward(const ScenarioSet& candidates, const ScenarioSet& related, double angle_threshold,
                             double minimum_speed, double max_distance) const override;
  ScenarioSet heading_in_relative_direction_to(const ScenarioSet& candidates, const ScenarioSet& related,
                                               RelativeHeading direction) const override;
  ScenarioSet has_objects_in_relative_direction(const ScenarioSet& candidates, const ScenarioSet& related,
                                                Direction direction, double min_number, double max_number,
                                                double within_distance, double lateral_thresh) const override;
  ScenarioSet get_objects_in_relative_direction(const ScenarioSet& candidates, const ScenarioSet& related,
                                                Direction direction, double min_number, double max_number,
                                                double within_distance, double lateral_thresh) const override;
  ScenarioSet being_crossed_by(const ScenarioSet& candidates, const ScenarioSet& related, Direction direction,
                               CrossingSense in_direction, double forward_thresh,
                               double lateral_thresh) const override;
  ScenarioSet near_objects(const ScenarioSet& candidates, const ScenarioSet& related, double distance_thresh,
                           double min_objects, bool include_self) const override;
  ScenarioSet following(const ScenarioSet& candidates, const ScenarioSet& related) const override;
  ScenarioSet at_pedestrian_crossing(const ScenarioSet& candidates, double within_distance) const override;
  ScenarioSet on_lane_type(const ScenarioSet& candidates, LaneType lane_type) const override;
  ScenarioSet near_intersection(const ScenarioSet& candidates, double threshold) const override;
  ScenarioSet on_intersection(const ScenarioSet& candidates) const override;
  ScenarioSet at_stop_sign(const ScenarioSet& candidates, double forward_thresh) const override;
  ScenarioSet in_drivable_area(const ScenarioSet& candidates) const override;
  ScenarioSet on_road(const ScenarioSet& candidates) const override;
  ScenarioSet in_same_lane(const ScenarioSet& candidates, const ScenarioSet& related) const override;
  ScenarioSet on_relative_side_of_road(const ScenarioSet& candidates, const ScenarioSet& related,
                                       RoadSide side) const override;
  ScenarioSet is_color(const ScenarioSet& candidates, std::string_view color) const override;

 private:
  LogContext ctx_;
  EngineConstants constants_;
  bool parallel_;
};

}  // namespace refmine
