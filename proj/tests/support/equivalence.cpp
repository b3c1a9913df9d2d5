#include "equivalence.hpp"

#include "refmine/oracle.hpp"

#include <functional>
#include <random>
#include <sstream>
#include <tuple>

namespace refmine::testing {

namespace {

using Triple = std::tuple<std::string, std::string, Timestamp>;

std::set<Triple> flatten(const ScenarioSet& s) {
  std::set<Triple> out;
  for (const auto& [id, e] : s) {
    for (Timestamp t : e.timestamps) out.emplace(id, "", t);
    for (const auto& [r, ts] : e.related) {
      for (Timestamp t : ts) out.emplace(id, r, t);
    }
  }
  return out;
}

std::string show(const Triple& t) {
  std::ostringstream os;
  os << "(" << std::get<0>(t) << ", " << (std::get<1>(t).empty() ? "-" : std::get<1>(t)) << ", " << std::get<2>(t)
     << ")";
  return os.str();
}

}  // namespace

std::string describe_difference(const ScenarioSet& a, const ScenarioSet& b) {
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  if (fa == fb) return {};
  std::ostringstream os;
  os << fa.size() << " vs " << fb.size() << " entries";
  for (const auto& t : fa) {
    if (!fb.count(t)) {
      os << "; only first " << show(t);
      break;
    }
  }
  for (const auto& t : fb) {
    if (!fa.count(t)) {
      os << "; only second " << show(t);
      break;
    }
  }
  return os.str();
}

namespace {

struct Inputs {
  std::vector<std::pair<std::string, ScenarioSet>> candidates;
  std::vector<std::pair<std::string, ScenarioSet>> related;
};

ScenarioSet by_category(const LogBundle& bundle, std::string_view name) {
  const auto cats = expand_category(name);
  ScenarioSet out;
  for (const auto& t : bundle.tracks) {
    if (std::find(cats.begin(), cats.end(), t.category) == cats.end()) continue;
    for (const auto& b : t.boxes) out.add(t.id, b.timestamp);
  }
  return out;
}

/// Random subset of observed pairs with random relationships attached, plus a
/// phantom id that no track carries.
ScenarioSet random_subset(const LogBundle& bundle, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScenarioSet out;
  for (const auto& t : bundle.tracks) {
    for (const auto& b : t.boxes) {
      if (u(rng) > 0.7) continue;
      out.add(t.id, b.timestamp);
      for (const auto& other : bundle.tracks) {
        if (other.id != t.id && u(rng) < 0.1) out.add_relationship(t.id, other.id, b.timestamp);
      }
    }
  }
  if (!bundle.tracks.empty() && !bundle.tracks.front().boxes.empty()) {
    out.add("phantom", bundle.tracks.front().boxes.front().timestamp);
  }
  return out;
}

}  // namespace

void compare_backends(const LogBundle& bundle, std::uint64_t seed, EquivalenceReport& report) {
  const Engine engine(bundle);
  const OracleBackend oracle(bundle);
  compare_predicates(engine, oracle, bundle, seed, report);
}

void compare_predicates(const PredicateBackend& engine, const PredicateBackend& oracle, const LogBundle& bundle,
                        std::uint64_t seed, EquivalenceReport& report) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  Inputs in;
  in.candidates = {{"ANY", by_category(bundle, "ANY")},
                   {"VEHICLE", by_category(bundle, "VEHICLE")},
                   {"subset", random_subset(bundle, rng)}};
  in.related = {{"ANY", by_category(bundle, "ANY")},
                {"PEDESTRIAN", by_category(bundle, "PEDESTRIAN")},
                {"subset", random_subset(bundle, rng)}};

  std::vector<ScenarioSet> outputs;
  auto check = [&](const std::string& fn, const std::string& label,
                   const std::function<ScenarioSet(const PredicateBackend&)>& call) {
    ++report.calls;
    report.covered.insert(fn);
    const ScenarioSet a = call(engine);
    const ScenarioSet b = call(oracle);
    if (!a.empty()) ++report.nonempty[fn];
    const auto diff = describe_difference(a, b);
    if (!diff.empty()) {
      ++report.mismatch_count;
      ++report.mismatches_by_function[fn];
      if (report.mismatches.size() < 20) {
        report.mismatches.push_back(bundle.log_id + " " + fn + "(" + label + "): " + diff);
      }
    }
    if (outputs.size() < 64) outputs.push_back(a);
  };

  const std::vector<std::string> dirs = {"forward", "backward", "left", "right"};
  for (const char* cat : {"ANY", "VEHICLE", "PEDESTRIAN", "BUS", "EGO_VEHICLE"}) {
    check("get_objects_of_category", cat, [&](const PredicateBackend& b) { return b.get_objects_of_category(cat); });
  }

  for (const auto& [cname, c] : in.candidates) {
    const auto& C = c;
    check("is_category", cname, [&](const PredicateBackend& b) { return b.is_category(C, "VEHICLE"); });
    check("is_category", cname, [&](const PredicateBackend& b) { return b.is_category(C, "PEDESTRIAN"); });
    {
      const double lo = uni(0, 5), hi = uni(5, 20);
      check("has_velocity", cname, [&](const PredicateBackend& b) { return b.has_velocity(C, 0.5, kInf); });
      check("has_velocity", cname, [&](const PredicateBackend& b) { return b.has_velocity(C, lo, hi); });
    }
    check("stationary", cname, [&](const PredicateBackend& b) { return b.stationary(C); });
    {
      const double lo = uni(-3, 0), hi = uni(0, 3);
      check("accelerating", cname, [&](const PredicateBackend& b) { return b.accelerating(C, 0.65, kInf); });
      check("accelerating", cname, [&](const PredicateBackend& b) { return b.accelerating(C, lo, hi); });
      check("has_lateral_acceleration", cname,
            [&](const PredicateBackend& b) { return b.has_lateral_acceleration(C, -kInf, -lo); });
      check("has_lateral_acceleration", cname,
            [&](const PredicateBackend& b) { return b.has_lateral_acceleration(C, hi, kInf); });
    }
    for (auto d : {TurnDirection::left, TurnDirection::right, TurnDirection::either}) {
      check("turning", cname, [&](const PredicateBackend& b) { return b.turning(C, d); });
      check("changing_lanes", cname, [&](const PredicateBackend& b) { return b.changing_lanes(C, d); });
    }
    {
      const double within = uni(0.5, 10);
      check("at_pedestrian_crossing", cname, [&](const PredicateBackend& b) { return b.at_pedestrian_crossing(C, 1); });
      check("at_pedestrian_crossing", cname,
            [&](const PredicateBackend& b) { return b.at_pedestrian_crossing(C, within); });
      check("near_intersection", cname, [&](const PredicateBackend& b) { return b.near_intersection(C, 5); });
      check("near_intersection", cname, [&](const PredicateBackend& b) { return b.near_intersection(C, within); });
      check("at_stop_sign", cname, [&](const PredicateBackend& b) { return b.at_stop_sign(C, 10); });
      check("at_stop_sign", cname, [&](const PredicateBackend& b) { return b.at_stop_sign(C, within); });
    }
    for (auto t : {LaneType::VEHICLE, LaneType::BUS, LaneType::BIKE}) {
      check("on_lane_type", cname, [&](const PredicateBackend& b) { return b.on_lane_type(C, t); });
    }
    check("on_intersection", cname, [&](const PredicateBackend& b) { return b.on_intersection(C); });
    check("in_drivable_area", cname, [&](const PredicateBackend& b) { return b.in_drivable_area(C); });
    check("on_road", cname, [&](const PredicateBackend& b) { return b.on_road(C); });
    for (const char* color : {"red", "white", "silver", "black", "yellow", "blue", "green"}) {
      check("is_color", cname, [&](const PredicateBackend& b) { return b.is_color(C, color); });
    }

    for (const auto& [rname, r] : in.related) {
      const auto& R = r;
      const std::string label = cname + "," + rname;
      const double angle = uni(1, 180), dist = uni(2, 60), speed = uni(0, 5);
      check("facing_toward", label, [&](const PredicateBackend& b) { return b.facing_toward(C, R, 22.5, 50); });
      check("facing_toward", label, [&](const PredicateBackend& b) { return b.facing_toward(C, R, angle, dist); });
      check("heading_toward", label,
            [&](const PredicateBackend& b) { return b.heading_toward(C, R, 22.5, 0.5, kInf); });
      check("heading_toward", label,
            [&](const PredicateBackend& b) { return b.heading_toward(C, R, angle, speed, dist); });
      for (auto h : {RelativeHeading::same, RelativeHeading::opposite, RelativeHeading::perpendicular}) {
        check("heading_in_relative_direction_to", label,
              [&](const PredicateBackend& b) { return b.heading_in_relative_direction_to(C, R, h); });
      }
      for (const auto& dn : dirs) {
        const Direction d = *parse_direction(dn);
        const double mn = std::floor(uni(0, 4) * 2) / 2, mx = mn + std::floor(uni(0, 3) * 2) / 2;
        const double within = uni(1, 40), lat = uni(0, 8);
        check("has_objects_in_relative_direction", label + "," + dn, [&](const PredicateBackend& b) {
          return b.has_objects_in_relative_direction(C, R, d, 1, kInf, 50, kInf);
        });
        check("has_objects_in_relative_direction", label + "," + dn, [&](const PredicateBackend& b) {
          return b.has_objects_in_relative_direction(C, R, d, mn, mx, within, lat);
        });
        check("get_objects_in_relative_direction", label + "," + dn, [&](const PredicateBackend& b) {
          return b.get_objects_in_relative_direction(C, R, d, 0, kInf, 50, kInf);
        });
        check("get_objects_in_relative_direction", label + "," + dn, [&](const PredicateBackend& b) {
          return b.get_objects_in_relative_direction(C, R, d, mn, mx, within, lat);
        });
        for (auto sense : {CrossingSense::either, CrossingSense::clockwise, CrossingSense::counterclockwise}) {
          check("being_crossed_by", label + "," + dn, [&](const PredicateBackend& b) {
            return b.being_crossed_by(C, R, d, sense, sense == CrossingSense::either ? 10.0 : within,
                                      sense == CrossingSense::either ? 5.0 : lat);
          });
        }
      }
      const double near = uni(1, 30), count = std::floor(uni(0, 4) * 2) / 2;
      check("near_objects", label, [&](const PredicateBackend& b) { return b.near_objects(C, R, 10, 1, false); });
      check("near_objects", label, [&](const PredicateBackend& b) { return b.near_objects(C, R, near, count, true); });
      check("following", label, [&](const PredicateBackend& b) { return b.following(C, R); });
      check("in_same_lane", label, [&](const PredicateBackend& b) { return b.in_same_lane(C, R); });
      for (auto side : {RoadSide::same, RoadSide::opposite}) {
        check("on_relative_side_of_road", label,
              [&](const PredicateBackend& b) { return b.on_relative_side_of_road(C, R, side); });
      }
    }
  }

  // Combinators over the predicate outputs gathered above.
  std::uniform_int_distribution<std::size_t> pick(0, outputs.empty() ? 0 : outputs.size() - 1);
  for (int i = 0; i < 12 && !outputs.empty(); ++i) {
    std::vector<ScenarioSet> args;
    const int n = 1 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < n; ++k) args.push_back(outputs[pick(rng)]);
    for (const char* fn : {"scenario_and", "scenario_or"}) {
      ++report.calls;
      report.covered.insert(fn);
      const bool is_and = std::string_view(fn) == "scenario_and";
      const ScenarioSet a = is_and ? scenario_and(args) : scenario_or(args);
      const ScenarioSet b = is_and ? oracle_and(args) : oracle_or(args);
      if (!a.empty()) ++report.nonempty[fn];
      const auto diff = describe_difference(a, b);
      if (!diff.empty()) {
        ++report.mismatch_count;
      ++report.mismatches_by_function[fn];
        if (report.mismatches.size() < 20) report.mismatches.push_back(bundle.log_id + " " + fn + ": " + diff);
      }
    }
  }
}

}  // namespace refmine::testing
