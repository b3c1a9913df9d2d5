#include "refmine/hd_map.hpp"
#include "refmine/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace refmine {

namespace {

constexpr double kTieEps = 1e-9;

Polyline read_points(const nlohmann::json& arr) {
  Polyline pts;
  for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

nlohmann::json write_points(const Polyline& pts) {
  auto arr = nlohmann::json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::optional<std::string> read_optional_id(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return obj.at(key).get<std::string>();
}

Vec2 unit(Vec2 v) {
  const double n = v.norm();
  return n > 0.0 ? v * (1.0 / n) : Vec2{1.0, 0.0};
}

void derive_lane_geometry(LaneSegment& lane) {
  if (lane.left_boundary.size() < 2 || lane.right_boundary.size() < 2) {
    throw std::invalid_argument("lane " + lane.id + ": boundaries need at least 2 points");
  }
  lane.polygon = lane.left_boundary;
  lane.polygon.insert(lane.polygon.end(), lane.right_boundary.rbegin(), lane.right_boundary.rend());
  if (!is_simple_polygon(lane.polygon)) {
    throw std::invalid_argument("lane " + lane.id + ": boundary polygon self-intersects");
  }
  lane.bounds = bounding_box(lane.polygon);

  const double len = std::max(polyline_length(lane.left_boundary), polyline_length(lane.right_boundary));
  const auto count = static_cast<std::size_t>(std::ceil(len / kCenterlineStep - 1e-9)) + 1;
  const auto n = std::max<std::size_t>(2, count);
  const auto left = resample_uniform(lane.left_boundary, n);
  const auto right = resample_uniform(lane.right_boundary, n);
  lane.centerline.resize(n);
  for (std::size_t i = 0; i < n; ++i) lane.centerline[i] = (left[i] + right[i]) * 0.5;

  lane.centerline_arclength.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    lane.centerline_arclength[i] =
        lane.centerline_arclength[i - 1] + (lane.centerline[i] - lane.centerline[i - 1]).norm();
  }
  lane.vertex_tangents.resize(n);
  lane.vertex_tangents.front() = unit(lane.centerline[1] - lane.centerline[0]);
  lane.vertex_tangents.back() = unit(lane.centerline[n - 1] - lane.centerline[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    lane.vertex_tangents[i] = unit(unit(lane.centerline[i] - lane.centerline[i - 1]) +
                                   unit(lane.centerline[i + 1] - lane.centerline[i]));
  }
}

}  // namespace

std::string_view to_string(LaneType t) {
  switch (t) {
    case LaneType::VEHICLE: return "VEHICLE";
    case LaneType::BUS: return "BUS";
    case LaneType::BIKE: return "BIKE";
  }
  return "VEHICLE";
}

std::optional<LaneType> parse_lane_type(std::string_view s) {
  if (s == "VEHICLE") return LaneType::VEHICLE;
  if (s == "BUS") return LaneType::BUS;
  if (s == "BIKE") return LaneType::BIKE;
  return std::nullopt;
}

PolygonLayer::PolygonLayer(std::vector<Polygon> polys) : polygons(std::move(polys)) {
  bounds.reserve(polygons.size());
  for (const auto& p : polygons) bounds.push_back(bounding_box(p));
}

double distance_to_layer(Vec2 p, const PolygonLayer& layer) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < layer.polygons.size(); ++i) {
    if (layer.bounds[i].distance(p) >= best) continue;
    best = std::min(best, distance_to_polygon(p, layer.polygons[i]));
    if (best == 0.0) break;
  }
  return best;
}

HDMap::HDMap(std::vector<LaneSegment> lanes, std::vector<PedestrianCrossing> crossings,
             std::vector<StopSign> stop_signs, DrivableArea drivable)
    : lanes_(std::move(lanes)),
      crossings_(std::move(crossings)),
      stop_signs_(std::move(stop_signs)),
      drivable_(std::move(drivable)) {
  build();
}

void HDMap::build() {
  std::sort(lanes_.begin(), lanes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  lane_ids_.clear();
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    if (!lane_ids_.emplace(lanes_[i].id, i).second) {
      throw std::invalid_argument("duplicate lane id " + lanes_[i].id);
    }
    derive_lane_geometry(lanes_[i]);
  }
  successor_idx_.assign(lanes_.size(), {});
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const auto& lane = lanes_[i];
    for (const auto* ref : {&lane.left_neighbor, &lane.right_neighbor}) {
      if (*ref && !lane_ids_.contains(**ref)) {
        throw std::invalid_argument("lane " + lane.id + ": unknown neighbor " + **ref);
      }
    }
    for (const auto& s : lane.successors) {
      auto it = lane_ids_.find(s);
      if (it == lane_ids_.end()) throw std::invalid_argument("lane " + lane.id + ": unknown successor " + s);
      successor_idx_[i].push_back(it->second);
    }
  }
  for (auto& sign : stop_signs_) sign.facing_yaw = normalize_angle(sign.facing_yaw);

  std::vector<Polygon> crossing_polys;
  for (const auto& c : crossings_) crossing_polys.push_back(c.polygon);
  crossing_layer_ = PolygonLayer(std::move(crossing_polys));
  std::vector<Polygon> intersection_polys;
  for (const auto& l : lanes_) {
    if (l.is_intersection) intersection_polys.push_back(l.polygon);
  }
  intersection_layer_ = PolygonLayer(std::move(intersection_polys));
  drivable_layer_ = PolygonLayer(drivable_.polygons);

  grid_.clear();
  cols_ = rows_ = 0;
  if (lanes_.empty()) return;
  extent_ = lanes_.front().bounds;
  for (const auto& l : lanes_) {
    extent_.min_x = std::min(extent_.min_x, l.bounds.min_x);
    extent_.min_y = std::min(extent_.min_y, l.bounds.min_y);
    extent_.max_x = std::max(extent_.max_x, l.bounds.max_x);
    extent_.max_y = std::max(extent_.max_y, l.bounds.max_y);
  }
  cols_ = static_cast<std::size_t>((extent_.max_x - extent_.min_x) / cell_size_) + 1;
  rows_ = static_cast<std::size_t>((extent_.max_y - extent_.min_y) / cell_size_) + 1;
  grid_.assign(cols_ * rows_, {});
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const auto& b = lanes_[i].bounds;
    const auto c0 = static_cast<std::size_t>((b.min_x - extent_.min_x) / cell_size_);
    const auto c1 = static_cast<std::size_t>((b.max_x - extent_.min_x) / cell_size_);
    const auto r0 = static_cast<std::size_t>((b.min_y - extent_.min_y) / cell_size_);
    const auto r1 = static_cast<std::size_t>((b.max_y - extent_.min_y) / cell_size_);
    for (std::size_t r = r0; r <= std::min(r1, rows_ - 1); ++r) {
      for (std::size_t c = c0; c <= std::min(c1, cols_ - 1); ++c) grid_[r * cols_ + c].push_back(i);
    }
  }
}

std::size_t HDMap::cell_of(double x, double y) const {
  const auto c = static_cast<std::size_t>((x - extent_.min_x) / cell_size_);
  const auto r = static_cast<std::size_t>((y - extent_.min_y) / cell_size_);
  return std::min(r, rows_ - 1) * cols_ + std::min(c, cols_ - 1);
}

const LaneSegment* HDMap::lane(std::string_view id) const {
  auto idx = lane_index(id);
  return idx ? &lanes_[*idx] : nullptr;
}

std::optional<std::size_t> HDMap::lane_index(std::string_view id) const {
  auto it = lane_ids_.find(std::string(id));
  if (it == lane_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> HDMap::assign_lane_index(Vec2 p) const {
  if (grid_.empty() || !extent_.contains(p)) return std::nullopt;
  // Cell lists are in ascending lane index, which is ascending id order.
  std::size_t hits[8];
  std::size_t n_hits = 0;
  std::vector<std::size_t> overflow;
  for (std::size_t i : grid_[cell_of(p.x, p.y)]) {
    const auto& lane = lanes_[i];
    if (!lane.bounds.contains(p) || !point_in_polygon(p, lane.polygon)) continue;
    if (n_hits < 8) {
      hits[n_hits++] = i;
    } else {
      overflow.push_back(i);
    }
  }
  if (n_hits == 0) return std::nullopt;
  if (n_hits == 1) return hits[0];
  std::vector<std::size_t> all(hits, hits + n_hits);
  all.insert(all.end(), overflow.begin(), overflow.end());
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i : all) {
    const double d = project_onto_polyline(p, lanes_[i].centerline).distance;
    if (!best || d < best_dist - kTieEps) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

std::optional<std::string> HDMap::assign_lane(Vec2 p) const {
  auto idx = assign_lane_index(p);
  if (!idx) return std::nullopt;
  return lanes_[*idx].id;
}

std::optional<std::size_t> HDMap::nearest_lane_index(Vec2 p, double max_distance) const {
  if (auto inside = assign_lane_index(p)) return inside;
  std::optional<std::size_t> best;
  double best_dist = max_distance;
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    if (lanes_[i].bounds.distance(p) > best_dist + kGeomEps) continue;
    const double d = distance_to_boundary(p, lanes_[i].polygon);
    if (d <= max_distance + kGeomEps && (!best || d < best_dist - kTieEps)) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

Vec2 HDMap::lane_direction(std::string_view lane_id, double s) const {
  auto idx = lane_index(lane_id);
  if (!idx) throw std::out_of_range("unknown lane id " + std::string(lane_id));
  return lane_direction(*idx, s);
}

Vec2 HDMap::lane_direction(std::size_t lane_idx, double s) const {
  const auto& lane = lanes_.at(lane_idx);
  const auto& cum = lane.centerline_arclength;
  s = std::clamp(s, 0.0, cum.back());
  auto it = std::upper_bound(cum.begin(), cum.end(), s);
  std::size_t k = it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
  k = std::clamp<std::size_t>(k, 1, cum.size() - 1);
  const double seg = cum[k] - cum[k - 1];
  const double f = seg > 0.0 ? (s - cum[k - 1]) / seg : 0.0;
  return unit(lane.vertex_tangents[k - 1] * (1.0 - f) + lane.vertex_tangents[k] * f);
}

Vec2 HDMap::lane_direction_at(std::size_t lane_idx, Vec2 p) const {
  return lane_direction(lane_idx, project_onto_polyline(p, lanes_.at(lane_idx).centerline).arclength);
}

bool HDMap::lanes_connected(std::size_t a, std::size_t b) const {
  if (a == b) return true;
  const auto& sa = successor_idx_[a];
  const auto& sb = successor_idx_[b];
  return std::find(sa.begin(), sa.end(), b) != sa.end() || std::find(sb.begin(), sb.end(), a) != sb.end();
}

HDMap HDMap::transformed(double theta, Vec2 t) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  auto xf = [&](Vec2 p) { return Vec2{c * p.x - s * p.y + t.x, s * p.x + c * p.y + t.y}; };
  auto xf_line = [&](const Polyline& line) {
    Polyline out;
    out.reserve(line.size());
    for (auto p : line) out.push_back(xf(p));
    return out;
  };
  std::vector<LaneSegment> lanes;
  for (const auto& l : lanes_) {
    LaneSegment copy;
    copy.id = l.id;
    copy.lane_type = l.lane_type;
    copy.left_boundary = xf_line(l.left_boundary);
    copy.right_boundary = xf_line(l.right_boundary);
    copy.left_neighbor = l.left_neighbor;
    copy.right_neighbor = l.right_neighbor;
    copy.successors = l.successors;
    copy.is_intersection = l.is_intersection;
    lanes.push_back(std::move(copy));
  }
  std::vector<PedestrianCrossing> crossings;
  for (const auto& x : crossings_) crossings.push_back({x.id, xf_line(x.polygon)});
  std::vector<StopSign> signs;
  for (const auto& s0 : stop_signs_) {
    signs.push_back({s0.id, xf(s0.position), normalize_angle(s0.facing_yaw + theta), s0.controlled_lane_ids});
  }
  DrivableArea drivable;
  for (const auto& poly : drivable_.polygons) drivable.polygons.push_back(xf_line(poly));
  return HDMap(std::move(lanes), std::move(crossings), std::move(signs), std::move(drivable));
}

HDMap HDMap::from_json(const nlohmann::json& doc) {
  std::vector<LaneSegment> lanes;
  for (const auto& j : doc.value("lanes", nlohmann::json::array())) {
    LaneSegment lane;
    lane.id = j.at("id").get<std::string>();
    const auto type_name = j.value("lane_type", std::string("VEHICLE"));
    auto type = parse_lane_type(type_name);
    if (!type) throw std::invalid_argument("lane " + lane.id + ": unknown lane_type " + type_name);
    lane.lane_type = *type;
    lane.left_boundary = read_points(j.at("left_boundary"));
    lane.right_boundary = read_points(j.at("right_boundary"));
    lane.left_neighbor = read_optional_id(j, "left_neighbor");
    lane.right_neighbor = read_optional_id(j, "right_neighbor");
    if (j.contains("successors")) lane.successors = j.at("successors").get<std::vector<std::string>>();
    lane.is_intersection = j.value("is_intersection", false);
    lanes.push_back(std::move(lane));
  }
  std::vector<PedestrianCrossing> crossings;
  for (const auto& j : doc.value("crossings", nlohmann::json::array())) {
    PedestrianCrossing c{j.at("id").get<std::string>(), read_points(j.at("polygon"))};
    if (!is_simple_polygon(c.polygon) || std::abs(polygon_area(c.polygon)) <= 0.0) {
      throw std::invalid_argument("crossing " + c.id + ": polygon must be simple with positive area");
    }
    crossings.push_back(std::move(c));
  }
  std::vector<StopSign> signs;
  for (const auto& j : doc.value("stop_signs", nlohmann::json::array())) {
    StopSign s;
    s.id = j.at("id").get<std::string>();
    s.position = {j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
    s.facing_yaw = j.at("facing_yaw").get<double>();
    if (j.contains("controlled_lane_ids")) {
      s.controlled_lane_ids = j.at("controlled_lane_ids").get<std::vector<std::string>>();
    }
    signs.push_back(std::move(s));
  }
  DrivableArea drivable;
  for (const auto& poly : doc.value("drivable", nlohmann::json::array())) {
    auto pts = read_points(poly);
    if (!is_simple_polygon(pts)) throw std::invalid_argument("drivable polygon self-intersects");
    drivable.polygons.push_back(std::move(pts));
  }
  return HDMap(std::move(lanes), std::move(crossings), std::move(signs), std::move(drivable));
}

HDMap HDMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file " + path.string());
  return from_json(nlohmann::json::parse(in));
}

nlohmann::json HDMap::to_json() const {
  nlohmann::json doc;
  doc["lanes"] = nlohmann::json::array();
  for (const auto& l : lanes_) {
    nlohmann::json j;
    j["id"] = l.id;
    j["lane_type"] = std::string(to_string(l.lane_type));
    j["left_boundary"] = write_points(l.left_boundary);
    j["right_boundary"] = write_points(l.right_boundary);
    j["left_neighbor"] = l.left_neighbor ? nlohmann::json(*l.left_neighbor) : nlohmann::json(nullptr);
    j["right_neighbor"] = l.right_neighbor ? nlohmann::json(*l.right_neighbor) : nlohmann::json(nullptr);
    j["successors"] = l.successors;
    j["is_intersection"] = l.is_intersection;
    doc["lanes"].push_back(std::move(j));
  }
  doc["crossings"] = nlohmann::json::array();
  for (const auto& c : crossings_) doc["crossings"].push_back({{"id", c.id}, {"polygon", write_points(c.polygon)}});
  doc["stop_signs"] = nlohmann::json::array();
  for (const auto& s : stop_signs_) {
    doc["stop_signs"].push_back({{"id", s.id},
                                 {"position", {s.position.x, s.position.y}},
                                 {"facing_yaw", s.facing_yaw},
                                 {"controlled_lane_ids", s.controlled_lane_ids}});
  }
  doc["drivable"] = nlohmann::json::array();
  for (const auto& poly : drivable_.polygons) doc["drivable"].push_back(write_points(poly));
  return doc;
}

void HDMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file " + path.string());
  out << to_json().dump(1) << '\n';
}

}  // namespace refmine
