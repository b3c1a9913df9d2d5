#pragma once

#include "refmine/predicates.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace refmine {

/// Brute-force reference backend. Enumerates every (track, related, timestamp)
/// triple with direct geometry: no spatial index, no per-log caches shared with
/// the engine, no parallelism and no early exits.
class OracleBackend final : public PredicateBackend {
 public:
  explicit OracleBackend(const LogBundle& bundle, EngineConstants constants = {});

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

  struct Sample {
    double x = 0, y = 0;
    double vx = 0, vy = 0;
    double a_fwd = 0, a_lat = 0;
    double yaw = 0;           ///< as observed
    double yaw_unwrapped = 0;
    double length = 0, width = 0;
    int lane = -1;            ///< index into the map's lane list, -1 off-lane
  };
  struct Object {
    const Track* track = nullptr;
    std::map<Timestamp, Sample> samples;
  };

  const Object* object(const std::string& id) const;

 private:
  template <typename Keep>
  ScenarioSet filter(const ScenarioSet& candidates, Keep keep) const;

  const LogBundle& bundle_;
  EngineConstants k_;
  std::map<std::string, Object, std::less<>> objects_;
};

/// Set algebra by explicit (id, t) pair and (id, related, t) triple sets.
ScenarioSet oracle_and(const std::vector<ScenarioSet>& inputs);
ScenarioSet oracle_or(const std::vector<ScenarioSet>& inputs);

/// Oracle lane assignment: every lane polygon is tested directly.
std::optional<std::size_t> oracle_assign_lane(const HDMap& map, double x, double y);

}  // namespace refmine
