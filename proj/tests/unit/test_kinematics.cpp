#include <doctest.h>

#include "fixtures.hpp"
#include "refmine/kinematics.hpp"

#include <cmath>
#include <numbers>

using namespace refmine;
using refmine::testing::Pose2;
using refmine::testing::make_track;
using refmine::testing::line_track;

TEST_CASE("stationary track has zero kinematics") {
  std::vector<Pose2> poses;
  for (int i = 0; i < 30; ++i) poses.push_back({i * 0.1, 5, -3, 0.7});
  const auto st = estimate_states(make_track("s", Category::REGULAR_VEHICLE, poses));
  REQUIRE(st.size() == 30);
  for (const auto& s : st) {
    CHECK(s.speed == doctest::Approx(0).epsilon(1e-12));
    CHECK(s.accel_forward == doctest::Approx(0).epsilon(1e-12));
    CHECK(s.accel_lateral == doctest::Approx(0).epsilon(1e-12));
    CHECK(s.yaw_rate == doctest::Approx(0).epsilon(1e-12));
  }
}

TEST_CASE("single box track gets a zero state") {
  const auto st = estimate_states(make_track("one", Category::PEDESTRIAN, {{1.0, 3, 4, 1}}));
  REQUIRE(st.size() == 1);
  CHECK(st[0].speed == 0.0);
  CHECK(st[0].yaw_rate == 0.0);
  CHECK(st[0].accel_forward == 0.0);
}

TEST_CASE("uniform motion at 10 m/s") {
  const auto st = estimate_states(line_track("u", Category::REGULAR_VEHICLE, 0, 5, 10, 0, 0, 0, 10));
  for (const auto& s : st) {
    CHECK(std::abs(s.speed - 10) < 1e-6);
    CHECK(std::abs(s.velocity.x - 10) < 1e-6);
    CHECK(std::abs(s.accel_forward) < 1e-6);
    CHECK(std::abs(s.accel_lateral) < 1e-6);
    CHECK(std::isfinite(s.yaw_rate));
  }
}

TEST_CASE("constant 2 m/s^2 ramp") {
  std::vector<Pose2> poses;
  for (int i = 0; i <= 60; ++i) {
    const double t = i * 0.1;
    poses.push_back({t, 0.5 * 2 * t * t, 0, 0});
  }
  const auto st = estimate_states(make_track("r", Category::REGULAR_VEHICLE, poses));
  const std::size_t margin = smoothing_window(0.1) + 1;
  for (std::size_t i = margin; i + margin < st.size(); ++i) {
    CHECK(std::abs(st[i].accel_forward - 2.0) < 0.05);
    CHECK(std::abs(st[i].accel_forward - 2.0) < 2.0 * 0.025);
    CHECK(std::abs(st[i].accel_lateral) < 1e-6);
  }
  // braking along -x while facing -x is still positive forward acceleration
  for (auto& p : poses) { p.x = -p.x; p.yaw = std::numbers::pi; }
  const auto rev = estimate_states(make_track("r", Category::REGULAR_VEHICLE, poses));
  CHECK(rev[30].accel_forward == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("lateral acceleration is left positive and yaw rate counterclockwise") {
  // circle of radius 20 at 5 m/s counterclockwise
  const double r = 20, v = 5, w = v / r;
  std::vector<Pose2> poses;
  for (int i = 0; i <= 100; ++i) {
    const double t = i * 0.1, a = w * t;
    poses.push_back({t, r * std::cos(a), r * std::sin(a), a + std::numbers::pi / 2});
  }
  const auto st = estimate_states(make_track("c", Category::REGULAR_VEHICLE, poses));
  const auto& mid = st[50];
  CHECK(mid.speed == doctest::Approx(v).epsilon(0.01));
  CHECK(mid.accel_lateral == doctest::Approx(v * v / r).epsilon(0.025));
  CHECK(mid.yaw_rate == doctest::Approx(w).epsilon(1e-6));
  CHECK(std::abs(mid.accel_forward) < 0.02);
}

TEST_CASE("yaw unwrap removes 2pi jumps") {
  std::vector<Pose2> poses;
  for (int i = 0; i < 40; ++i) poses.push_back({i * 0.1, 0, 0, normalize_angle(3.0 + 0.05 * i)});
  const auto track = make_track("y", Category::REGULAR_VEHICLE, poses);
  const auto uw = unwrap_yaw(track);
  for (std::size_t i = 1; i < uw.size(); ++i) CHECK(uw[i] - uw[i - 1] == doctest::Approx(0.05));
  const auto st = estimate_states(track);
  for (const auto& s : st) CHECK(s.yaw_rate == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("smoothing window") {
  CHECK(smoothing_window(0.1) == 5);
  CHECK(smoothing_window(0.5) >= 1);
  CHECK(smoothing_window(0.05) * 0.05 >= 0.5 - 1e-12);
}

TEST_CASE("rotating the log leaves scalar kinematics unchanged") {
  std::vector<Pose2> poses;
  for (int i = 0; i <= 50; ++i) {
    const double t = i * 0.1;
    poses.push_back({t, 3 * t + 0.2 * t * t, 0.5 * std::sin(t), 0.3 * std::sin(t)});
  }
  const auto base = estimate_states(make_track("a", Category::REGULAR_VEHICLE, poses));
  const double th = 1.234, c = std::cos(th), s = std::sin(th);
  for (auto& p : poses) {
    const double x = p.x, y = p.y;
    p.x = c * x - s * y;
    p.y = s * x + c * y;
    p.yaw = normalize_angle(p.yaw + th);
  }
  const auto rot = estimate_states(make_track("a", Category::REGULAR_VEHICLE, poses));
  REQUIRE(rot.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(std::abs(rot[i].speed - base[i].speed) < 1e-9);
    CHECK(std::abs(rot[i].accel_forward - base[i].accel_forward) < 1e-9);
    CHECK(std::abs(rot[i].accel_lateral - base[i].accel_lateral) < 1e-9);
    CHECK(std::abs(rot[i].yaw_rate - base[i].yaw_rate) < 1e-9);
  }
}
