#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refmine {

/// Nanoseconds since epoch. All tracks of a log share one observation clock.
using Timestamp = std::int64_t;

inline constexpr Timestamp kNanosPerSecond = 1'000'000'000;

inline constexpr double to_seconds(Timestamp t) {
  return static_cast<double>(t) / static_cast<double>(kNanosPerSecond);
}

/// The 30 annotated object classes plus the injected ego vehicle.
enum class Category : std::uint8_t {
  ANIMAL,
  ARTICULATED_BUS,
  BICYCLE,
  BICYCLIST,
  BOLLARD,
  BOX_TRUCK,
  BUS,
  CONSTRUCTION_BARREL,
  CONSTRUCTION_CONE,
  DOG,
  LARGE_VEHICLE,
  MESSAGE_BOARD_TRAILER,
  MOBILE_PEDESTRIAN_CROSSING_SIGN,
  MOTORCYCLE,
  MOTORCYCLIST,
  OFFICIAL_SIGNALER,
  PEDESTRIAN,
  RAILED_VEHICLE,
  REGULAR_VEHICLE,
  SCHOOL_BUS,
  SIGN,
  STOP_SIGN,
  STROLLER,
  TRAFFIC_LIGHT_TRAILER,
  TRUCK,
  TRUCK_CAB,
  VEHICULAR_TRAILER,
  WHEELCHAIR,
  WHEELED_DEVICE,
  WHEELED_RIDER,
  EGO_VEHICLE,
};

inline constexpr std::size_t kCategoryCount = 31;

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view name);

/// All concrete category names, in enum order.
const std::vector<std::string_view>& category_names();

/// Resolves a concrete name or one of the super-categories "ANY"/"VEHICLE".
/// Throws std::invalid_argument listing the valid names for anything else.
std::vector<Category> expand_category(std::string_view name);

bool is_valid_category_query(std::string_view name);

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

struct TrackBox {
  Timestamp timestamp = 0;
  Vec3 translation;
  double yaw = 0.0;
  Vec3 size{1.0, 1.0, 1.0};  ///< length, width, height
  double confidence = 1.0;

  friend bool operator==(const TrackBox&, const TrackBox&) = default;
};

struct Track {
  std::string id;
  Category category = Category::REGULAR_VEHICLE;
  std::vector<TrackBox> boxes;  ///< strictly increasing timestamps

  /// Index of the box observed at exactly `t`, if any.
  std::optional<std::size_t> index_of(Timestamp t) const;

  double summed_confidence() const;

  friend bool operator==(const Track&, const Track&) = default;
};

}  // namespace refmine
