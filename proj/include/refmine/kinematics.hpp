#pragma once

#include "refmine/geometry.hpp"
#include "refmine/types.hpp"

#include <vector>

namespace refmine {

struct KinematicState {
  Timestamp timestamp = 0;
  Vec2 velocity;              ///< m/s, city frame
  double speed = 0.0;         ///< |velocity|
  double accel_forward = 0.0; ///< along the box heading, + speeding up
  double accel_lateral = 0.0; ///< along the left normal of the heading
  double yaw_rate = 0.0;      ///< rad/s, + counterclockwise
};

/// Centered moving-average window (samples) for a given sample period.
/// Five samples at 10 Hz; at other rates the window covers at least 0.5 s.
std::size_t smoothing_window(double period_s);

/// Yaw sequence with 2*pi jumps removed.
std::vector<double> unwrap_yaw(const Track& track);

/// Velocity, accelerations and yaw rate for every box of the track.
std::vector<KinematicState> estimate_states(const Track& track);

}  // namespace refmine
