#include "refmine/types.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace refmine {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kNames = {
    "ANIMAL",
    "ARTICULATED_BUS",
    "BICYCLE",
    "BICYCLIST",
    "BOLLARD",
    "BOX_TRUCK",
    "BUS",
    "CONSTRUCTION_BARREL",
    "CONSTRUCTION_CONE",
    "DOG",
    "LARGE_VEHICLE",
    "MESSAGE_BOARD_TRAILER",
    "MOBILE_PEDESTRIAN_CROSSING_SIGN",
    "MOTORCYCLE",
    "MOTORCYCLIST",
    "OFFICIAL_SIGNALER",
    "PEDESTRIAN",
    "RAILED_VEHICLE",
    "REGULAR_VEHICLE",
    "SCHOOL_BUS",
    "SIGN",
    "STOP_SIGN",
    "STROLLER",
    "TRAFFIC_LIGHT_TRAILER",
    "TRUCK",
    "TRUCK_CAB",
    "VEHICULAR_TRAILER",
    "WHEELCHAIR",
    "WHEELED_DEVICE",
    "WHEELED_RIDER",
    "EGO_VEHICLE",
};

constexpr std::array<Category, 11> kVehicleClasses = {
    Category::ARTICULATED_BUS, Category::BOX_TRUCK,      Category::BUS,
    Category::EGO_VEHICLE,     Category::LARGE_VEHICLE,  Category::MOTORCYCLE,
    Category::RAILED_VEHICLE,  Category::REGULAR_VEHICLE, Category::SCHOOL_BUS,
    Category::TRUCK,           Category::TRUCK_CAB,
};

}  // namespace

std::string_view to_string(Category c) { return kNames.at(static_cast<std::size_t>(c)); }

std::optional<Category> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

const std::vector<std::string_view>& category_names() {
  static const std::vector<std::string_view> names(kNames.begin(), kNames.end());
  return names;
}

bool is_valid_category_query(std::string_view name) {
  return name == "ANY" || name == "VEHICLE" || parse_category(name).has_value();
}

std::vector<Category> expand_category(std::string_view name) {
  if (name == "ANY") {
    std::vector<Category> all;
    for (std::size_t i = 0; i < kCategoryCount; ++i) all.push_back(static_cast<Category>(i));
    return all;
  }
  if (name == "VEHICLE") return {kVehicleClasses.begin(), kVehicleClasses.end()};
  if (auto c = parse_category(name)) return {*c};

  std::string msg = "unknown category '" + std::string(name) + "'; valid: ANY, VEHICLE";
  for (auto n : kNames) {
    msg += ", ";
    msg += n;
  }
  throw std::invalid_argument(msg);
}

std::optional<std::size_t> Track::index_of(Timestamp t) const {
  auto it = std::lower_bound(boxes.begin(), boxes.end(), t,
                             [](const TrackBox& b, Timestamp v) { return b.timestamp < v; });
  if (it == boxes.end() || it->timestamp != t) return std::nullopt;
  return static_cast<std::size_t>(it - boxes.begin());
}

double Track::summed_confidence() const {
  double s = 0.0;
  for (const auto& b : boxes) s += b.confidence;
  return s;
}

}  // namespace refmine
