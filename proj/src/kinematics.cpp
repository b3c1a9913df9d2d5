#include "refmine/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace refmine {

std::size_t smoothing_window(double period_s) {
  if (!(period_s > 0.0)) return 1;
  auto n = static_cast<std::size_t>(std::max(1L, std::lround(0.5 / period_s)));
  if (n % 2 == 0) ++n;
  return n;
}

std::vector<double> unwrap_yaw(const Track& track) {
  std::vector<double> out;
  out.reserve(track.boxes.size());
  for (const auto& b : track.boxes) {
    if (out.empty()) {
      out.push_back(b.yaw);
      continue;
    }
    out.push_back(out.back() + normalize_angle(b.yaw - normalize_angle(out.back())));
  }
  return out;
}

namespace {

double median_period(const Track& track) {
  std::vector<double> dts;
  for (std::size_t i = 1; i < track.boxes.size(); ++i) {
    dts.push_back(to_seconds(track.boxes[i].timestamp - track.boxes[i - 1].timestamp));
  }
  std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
  return dts[dts.size() / 2];
}

/// Central differences with one-sided ends.
template <typename T>
std::vector<T> differentiate(const std::vector<T>& v, const std::vector<double>& t) {
  const std::size_t n = v.size();
  std::vector<T> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    d[i] = (v[hi] - v[lo]) * (1.0 / (t[hi] - t[lo]));
  }
  return d;
}

}  // namespace

std::vector<KinematicState> estimate_states(const Track& track) {
  const std::size_t n = track.boxes.size();
  std::vector<KinematicState> states(n);
  for (std::size_t i = 0; i < n; ++i) states[i].timestamp = track.boxes[i].timestamp;
  if (n < 2) return states;

  const std::size_t half = smoothing_window(median_period(track)) / 2;
  const Timestamp t0 = track.boxes.front().timestamp;
  std::vector<double> t(n);
  std::vector<Vec2> smoothed(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = to_seconds(track.boxes[i].timestamp - t0);
    const std::size_t h = std::min({half, i, n - 1 - i});
    Vec2 sum;
    for (std::size_t k = i - h; k <= i + h; ++k) sum = sum + Vec2{track.boxes[k].translation.x, track.boxes[k].translation.y};
    smoothed[i] = sum * (1.0 / static_cast<double>(2 * h + 1));
  }

  const auto velocity = differentiate(smoothed, t);
  const auto accel = differentiate(velocity, t);
  const auto yaw = unwrap_yaw(track);
  const auto yaw_rate = differentiate(yaw, t);

  for (std::size_t i = 0; i < n; ++i) {
    auto& s = states[i];
    s.velocity = velocity[i];
    s.speed = velocity[i].norm();
    const Vec2 fwd = heading_vector(track.boxes[i].yaw);
    s.accel_forward = accel[i].dot(fwd);
    s.accel_lateral = accel[i].dot(Vec2{-fwd.y, fwd.x});
    s.yaw_rate = yaw_rate[i];
  }
  return states;
}

}  // namespace refmine
