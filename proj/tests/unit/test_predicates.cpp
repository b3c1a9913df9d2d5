#include <doctest.h>

#include "equivalence.hpp"
#include "fixtures.hpp"
#include "refmine/oracle.hpp"
#include "refmine/predicates.hpp"
#include "refmine/synthgen.hpp"

#include <numbers>
#include <set>
#include <tuple>

using namespace refmine;
using refmine::testing::Pose2;
using refmine::testing::bundle_of;
using refmine::testing::line_track;
using refmine::testing::make_track;

namespace {

struct Scene {
  LogBundle bundle;
  Engine engine;
  OracleBackend oracle;
  explicit Scene(LogBundle b) : bundle(std::move(b)), engine(bundle), oracle(bundle) {}
};

Scene scene_of(const synth::SceneScript& s) { return Scene(synth::generate_scene(s).bundle); }

std::set<std::string> keys(const ScenarioSet& s) {
  std::set<std::string> out;
  for (const auto& [id, e] : s) out.insert(id);
  return out;
}

std::set<std::string> related_of(const ScenarioSet& s, const std::string& id) {
  std::set<std::string> out;
  if (const auto* e = s.find(id)) {
    for (const auto& [r, ts] : e->related) out.insert(r);
  }
  return out;
}

const TimeSet& stamps_of(const LogBundle& b, const std::string& id) {
  static TimeSet none;
  for (const auto& t : b.tracks) {
    if (t.id == id) {
      static thread_local TimeSet ts;
      std::vector<Timestamp> v;
      for (const auto& box : t.boxes) v.push_back(box.timestamp);
      ts = TimeSet(v);
      return ts;
    }
  }
  return none;
}

HDMap straight() { return synth::build_map("straight_road"); }

ScenarioSet or2(const ScenarioSet& a, const ScenarioSet& b) { return scenario_or(std::vector<ScenarioSet>{a, b}); }
ScenarioSet and2(const ScenarioSet& a, const ScenarioSet& b) { return scenario_and(std::vector<ScenarioSet>{a, b}); }

std::set<std::tuple<std::string, std::string, Timestamp>> triples(const ScenarioSet& s) {
  std::set<std::tuple<std::string, std::string, Timestamp>> out;
  for (const auto& [id, e] : s) {
    for (const auto& [r, ts] : e.related) {
      for (Timestamp t : ts) out.emplace(id, r, t);
    }
  }
  return out;
}

std::size_t common(const ScenarioSet& a, const ScenarioSet& b) {
  const auto ta = triples(a), tb = triples(b);
  std::size_t n = 0;
  for (const auto& x : ta) n += tb.count(x);
  return n;
}

}  // namespace

TEST_CASE("S1 category queries") {
  Scene s = scene_of(synth::fixture_s1());
  const auto peds = s.engine.get_objects_of_category("PEDESTRIAN");
  CHECK(keys(peds) == std::set<std::string>{"T_C"});
  CHECK(peds.find("T_C")->timestamps == stamps_of(s.bundle, "T_C"));
  CHECK(peds == s.oracle.get_objects_of_category("PEDESTRIAN"));

  const auto any = s.engine.get_objects_of_category("ANY");
  CHECK(any.size() == s.bundle.tracks.size());
  CHECK(any.size() == 5);  // T_A, T_B, T_C, T_D and the ego
  CHECK(any.relationship_count() == 0);
  CHECK(s.engine.get_objects_of_category("BUS").empty());
  CHECK_THROWS_AS(s.engine.get_objects_of_category("SPACESHIP"), std::invalid_argument);

  const auto vehicles = s.engine.get_objects_of_category("VEHICLE");
  CHECK(keys(s.engine.is_category(vehicles, "REGULAR_VEHICLE")) == std::set<std::string>{"T_A", "T_B", "T_D"});
  CHECK(s.engine.is_category(any, "PEDESTRIAN") == peds);
  CHECK(s.engine.is_category(ScenarioSet{}, "PEDESTRIAN").empty());
}

TEST_CASE("S1 motion predicates") {
  Scene s = scene_of(synth::fixture_s1());
  const auto any = s.engine.get_objects_of_category("ANY");
  const auto fast = s.engine.has_velocity(any, 5, kInf);
  CHECK(fast.contains("T_A"));
  CHECK(fast.find("T_A")->timestamps == stamps_of(s.bundle, "T_A"));
  CHECK_FALSE(fast.contains("T_C"));
  CHECK_FALSE(s.engine.has_velocity(any, 0.5, kInf).contains("T_C"));
  CHECK(s.engine.has_velocity(any, 0, kInf) == any);
  CHECK_THROWS_AS(s.engine.has_velocity(any, 3, 1), std::invalid_argument);

  const auto still = s.engine.stationary(any);
  CHECK(still.contains("T_C"));
  CHECK_FALSE(still.contains("T_A"));
  CHECK(still == s.oracle.stationary(any));

  CHECK(s.engine.accelerating(any, 0.65, kInf).empty());
  CHECK(s.engine.has_lateral_acceleration(any, 2, kInf).empty());
  CHECK(s.engine.has_lateral_acceleration(any, -kInf, kInf) == any);
  CHECK(s.engine.turning(any, TurnDirection::either).empty());
}

TEST_CASE("oscillating track stays stationary") {
  std::vector<Pose2> poses;
  for (int i = 0; i < 50; ++i) poses.push_back({i * 0.1, (i % 2 ? 0.5 : -0.5), 0, 0});
  Scene s(bundle_of({make_track("o", Category::PEDESTRIAN, poses)}));
  const auto any = s.engine.get_objects_of_category("ANY");
  CHECK(s.engine.stationary(any).contains("o"));
}

TEST_CASE("acceleration and braking") {
  std::vector<Pose2> ramp, brake;
  for (int i = 0; i <= 50; ++i) {
    const double t = i * 0.1;
    ramp.push_back({t, t * t, 0, 0});
    brake.push_back({t, 15 * t - 1.5 * t * t, 20, 0});
  }
  Scene s(bundle_of({make_track("ramp", Category::REGULAR_VEHICLE, ramp),
                     make_track("brake", Category::REGULAR_VEHICLE, brake)}));
  const auto any = s.engine.get_objects_of_category("ANY");
  const auto acc = s.engine.accelerating(any, 0.65, kInf);
  CHECK(keys(acc) == std::set<std::string>{"ramp"});
  CHECK(acc.find("ramp")->timestamps.contains(refmine::testing::sec(2.5)));
  const auto braking = s.engine.accelerating(any, -kInf, -1);
  CHECK(keys(braking) == std::set<std::string>{"brake"});
  CHECK(acc == s.oracle.accelerating(any, 0.65, kInf));
}

TEST_CASE("circular motion: lateral acceleration and turning") {
  // v = 10, r = 20, counterclockwise: a_lat = +5
  const double r = 20, v = 10, w = v / r;
  std::vector<Pose2> left, straight_line;
  for (int i = 0; i <= 40; ++i) {
    const double t = i * 0.1, a = w * t;
    left.push_back({t, r * std::cos(a), r * std::sin(a), normalize_angle(a + std::numbers::pi / 2)});
    straight_line.push_back({t, 100 + v * t, 50, 0});
  }
  Scene s(bundle_of({make_track("circle", Category::REGULAR_VEHICLE, left),
                     make_track("line", Category::REGULAR_VEHICLE, straight_line)}));
  const auto any = s.engine.get_objects_of_category("ANY");
  const auto lat = s.engine.has_lateral_acceleration(any, 2, kInf);
  CHECK(keys(lat) == std::set<std::string>{"circle"});
  CHECK(lat.find("circle")->timestamps.contains(refmine::testing::sec(2.0)));

  CHECK(keys(s.engine.turning(any, TurnDirection::left)) == std::set<std::string>{"circle"});
  CHECK(s.engine.turning(any, TurnDirection::right).empty());
  const auto either = s.engine.turning(any, TurnDirection::either);
  CHECK(either == or2(s.engine.turning(any, TurnDirection::left), s.engine.turning(any, TurnDirection::right)));
  CHECK(either == s.oracle.turning(any, TurnDirection::either));
}

TEST_CASE("lane changes") {
  Scene plain = scene_of(synth::fixture_s1());
  const auto vehicles = plain.engine.get_objects_of_category("VEHICLE");
  CHECK_FALSE(plain.engine.changing_lanes(vehicles, TurnDirection::either).contains("T_A"));
  CHECK(plain.engine.changing_lanes(plain.engine.get_objects_of_category("PEDESTRIAN"), TurnDirection::either).empty());

  Scene drift = scene_of(synth::fixture_s1_lane_change());
  const auto v2 = drift.engine.get_objects_of_category("VEHICLE");
  CHECK(drift.engine.changing_lanes(v2, TurnDirection::right).contains("T_A"));
  CHECK_FALSE(drift.engine.changing_lanes(v2, TurnDirection::left).contains("T_A"));
  CHECK(drift.engine.changing_lanes(v2, TurnDirection::right) == drift.oracle.changing_lanes(v2, TurnDirection::right));
  CHECK_FALSE(parse_turn_direction("sideways").has_value());
}

TEST_CASE("facing and heading toward") {
  Scene s(bundle_of({line_track("me", Category::REGULAR_VEHICLE, 0, 2, 10, 0, 0, 0, 5),
                     line_track("ahead", Category::PEDESTRIAN, 0, 2, 10, 30, 0, 0, 0),
                     line_track("behind", Category::PEDESTRIAN, 0, 2, 10, -30, 0, 0, 0),
                     line_track("parked", Category::REGULAR_VEHICLE, 0, 2, 10, 0, 40, 0, 0)}));
  const auto me = s.engine.is_category(s.engine.get_objects_of_category("ANY"), "REGULAR_VEHICLE");
  const auto peds = s.engine.get_objects_of_category("PEDESTRIAN");
  const auto mine = s.engine.is_category(me, "REGULAR_VEHICLE");

  const auto facing = s.engine.facing_toward(mine, peds, 22.5, 50);
  CHECK(keys(facing) == std::set<std::string>{"me"});
  CHECK(related_of(facing, "me") == std::set<std::string>{"ahead"});
  const auto behind_only = s.engine.get_objects_of_category("ANY");
  ScenarioSet rear;
  rear.add("behind", stamps_of(s.bundle, "behind"));
  CHECK(s.engine.facing_toward(mine, rear, 22.5, 50).empty());
  // 180 degrees reduces to a distance test
  CHECK(keys(s.engine.facing_toward(mine, rear, 180, 45)) == std::set<std::string>{"me"});
  CHECK(s.engine.facing_toward(mine, peds, 180, 50) == s.oracle.facing_toward(mine, peds, 180, 50));
  CHECK_THROWS_AS(s.engine.facing_toward(mine, peds, 0, 50), std::invalid_argument);
  (void)behind_only;

  const auto heading = s.engine.heading_toward(mine, peds, 22.5, 0.5, kInf);
  CHECK(keys(heading) == std::set<std::string>{"me"});
  CHECK(related_of(heading, "me") == std::set<std::string>{"ahead"});
  // the parked car is stationary: speed gate
  ScenarioSet parked;
  parked.add("parked", stamps_of(s.bundle, "parked"));
  CHECK(s.engine.heading_toward(parked, peds, 22.5, 0.5, kInf).empty());
  // moving directly away from the pedestrian behind
  CHECK(s.engine.heading_toward(mine, rear, 22.5, 0.5, kInf).empty());
}

TEST_CASE("S2 pedestrian heads toward and crosses the stopped vehicle") {
  Scene s = scene_of(synth::fixture_s2());
  const auto any = s.engine.get_objects_of_category("ANY");
  const auto P = s.engine.is_category(any, "PEDESTRIAN");
  const auto V = s.engine.is_category(any, "REGULAR_VEHICLE");

  const auto toward = s.engine.heading_toward(P, V, 22.5, 0.5, kInf);
  CHECK(toward.contains("P"));
  CHECK(toward == s.oracle.heading_toward(P, V, 22.5, 0.5, kInf));

  const auto crossed = s.engine.being_crossed_by(V, P, Direction::forward, CrossingSense::either, 10, 5);
  REQUIRE(crossed.contains("V"));
  CHECK(related_of(crossed, "V") == std::set<std::string>{"P"});
  CHECK(crossed == s.oracle.being_crossed_by(V, P, Direction::forward, CrossingSense::either, 10, 5));
  const auto cw = s.engine.being_crossed_by(V, P, Direction::forward, CrossingSense::clockwise, 10, 5);
  const auto ccw = s.engine.being_crossed_by(V, P, Direction::forward, CrossingSense::counterclockwise, 10, 5);
  CHECK(or2(cw, ccw) == crossed);
  CHECK(common(cw, ccw) == 0);

  const auto near = s.engine.near_objects(V, P, 10, 1, false);
  CHECK(near.contains("V"));
  CHECK(near == s.oracle.near_objects(V, P, 10, 1, false));
  CHECK(s.engine.near_objects(V, P, 10, 3, false).empty());
  CHECK(s.engine.near_objects(V, V, 10, 1, false).empty());
  CHECK_FALSE(s.engine.near_objects(V, V, 10, 1, true).empty());
}

TEST_CASE("pedestrian turning back before the midplane is never a crossing") {
  synth::SceneScript sc = synth::fixture_s2();
  sc.agents[0].motion = {"crossing", {{"x0", 61.0}, {"y0", -16.0}, {"x1", 61.0}, {"y1", -3.0}, {"speed", 2.0}, {"start", 0.0}}};
  Scene s = scene_of(sc);
  const auto any = s.engine.get_objects_of_category("ANY");
  CHECK(s.engine.being_crossed_by(s.engine.is_category(any, "REGULAR_VEHICLE"), s.engine.is_category(any, "PEDESTRIAN"),
                                  Direction::forward, CrossingSense::either, 10, 5)
            .empty());
}

TEST_CASE("S1 relative headings and directions") {
  Scene s = scene_of(synth::fixture_s1());
  const auto any = s.engine.get_objects_of_category("ANY");
  ScenarioSet A, B, D;
  A.add("T_A", stamps_of(s.bundle, "T_A"));
  B.add("T_B", stamps_of(s.bundle, "T_B"));
  D.add("T_D", stamps_of(s.bundle, "T_D"));

  CHECK(s.engine.heading_in_relative_direction_to(A, B, RelativeHeading::same).contains("T_A"));
  CHECK(s.engine.heading_in_relative_direction_to(A, D, RelativeHeading::opposite).contains("T_A"));
  CHECK(s.engine.heading_in_relative_direction_to(A, D, RelativeHeading::same).empty());
  const auto vehicles = s.engine.get_objects_of_category("VEHICLE");
  const auto same = s.engine.heading_in_relative_direction_to(vehicles, vehicles, RelativeHeading::same);
  const auto opp = s.engine.heading_in_relative_direction_to(vehicles, vehicles, RelativeHeading::opposite);
  const auto perp = s.engine.heading_in_relative_direction_to(vehicles, vehicles, RelativeHeading::perpendicular);
  // the three classes partition the relationships
  CHECK(common(same, opp) + common(same, perp) + common(opp, perp) == 0);

  const auto fwd = s.engine.has_objects_in_relative_direction(A, B, Direction::forward, 1, kInf, 50, kInf);
  REQUIRE(fwd.contains("T_A"));
  CHECK(related_of(fwd, "T_A") == std::set<std::string>{"T_B"});
  const auto back = s.engine.has_objects_in_relative_direction(B, A, Direction::backward, 1, kInf, 50, kInf);
  CHECK(related_of(back, "T_B") == std::set<std::string>{"T_A"});
  const auto vacuous = s.engine.has_objects_in_relative_direction(A, D, Direction::backward, 0, kInf, 50, kInf);
  CHECK(vacuous.without_relationships() == A);

  const auto got = s.engine.get_objects_in_relative_direction(A, B, Direction::forward, 1, kInf, 50, kInf);
  CHECK(got == reverse_relationship(fwd));
  CHECK(s.engine.get_objects_in_relative_direction(A, ScenarioSet{}, Direction::forward, 0, kInf, 50, kInf).empty());
  (void)any;
}

TEST_CASE("S1 lane relations") {
  Scene s = scene_of(synth::fixture_s1());
  ScenarioSet A, B, C, D;
  A.add("T_A", stamps_of(s.bundle, "T_A"));
  B.add("T_B", stamps_of(s.bundle, "T_B"));
  C.add("T_C", stamps_of(s.bundle, "T_C"));
  D.add("T_D", stamps_of(s.bundle, "T_D"));

  const auto fol = s.engine.following(A, B);
  CHECK(fol.contains("T_A"));
  CHECK(related_of(fol, "T_A") == std::set<std::string>{"T_B"});
  CHECK(s.engine.following(A, D).empty());
  CHECK(s.engine.following(B, A).empty());  // the lead is not behind

  CHECK(s.engine.in_same_lane(A, B).contains("T_A"));
  CHECK(s.engine.in_same_lane(A, D).empty());
  CHECK(s.engine.in_same_lane(A, ScenarioSet{}).empty());

  CHECK(s.engine.on_relative_side_of_road(A, B, RoadSide::same).contains("T_A"));
  CHECK(s.engine.on_relative_side_of_road(A, D, RoadSide::opposite).contains("T_A"));
  CHECK(s.engine.on_relative_side_of_road(A, D, RoadSide::same).empty());

  CHECK(s.engine.on_lane_type(A, LaneType::VEHICLE) == A);
  CHECK(s.engine.on_lane_type(A, LaneType::BUS).empty());
  CHECK(s.engine.on_lane_type(C, LaneType::VEHICLE).empty());

  CHECK(s.engine.on_road(A) == A);
  CHECK(s.engine.on_road(C).empty());
  CHECK(s.engine.in_drivable_area(C).empty());
  CHECK(s.engine.on_intersection(A).empty());
}

TEST_CASE("map layer predicates on hand-made tracks") {
  const HDMap map = straight();
  // the crosswalk edge is 3 m from (57, 1)
  Scene s(bundle_of({line_track("in", Category::PEDESTRIAN, 0, 1, 10, 61, 1, 0, 0),
                     line_track("three", Category::PEDESTRIAN, 0, 1, 10, 57, 1, 0, 0)},
                    map));
  const auto any = s.engine.get_objects_of_category("ANY");
  CHECK(keys(s.engine.at_pedestrian_crossing(any, 0)) == std::set<std::string>{"in"});
  CHECK(keys(s.engine.at_pedestrian_crossing(any, 1)) == std::set<std::string>{"in"});
  CHECK(keys(s.engine.at_pedestrian_crossing(any, 3)) == std::set<std::string>{"in", "three"});

  Scene bare(bundle_of({line_track("in", Category::PEDESTRIAN, 0, 1, 10, 61, 1, 0, 0)}));
  const auto any2 = bare.engine.get_objects_of_category("ANY");
  CHECK(bare.engine.at_pedestrian_crossing(any2, 100).empty());
  CHECK(bare.engine.in_drivable_area(any2).empty());
  CHECK(bare.engine.near_intersection(any2, 100).empty());
}

TEST_CASE("intersection and stop sign predicates") {
  Scene s = scene_of(synth::random_script(3));
  const auto any = s.engine.get_objects_of_category("ANY");
  for (double th : {0.0, 5.0, 20.0}) {
    CHECK(s.engine.near_intersection(any, th) == s.oracle.near_intersection(any, th));
  }
  CHECK(s.engine.near_intersection(any, 0) == s.engine.on_intersection(any));
  CHECK(s.engine.at_stop_sign(any, 10) == s.oracle.at_stop_sign(any, 10));
}

TEST_CASE("is_color") {
  Scene s = scene_of(synth::fixture_s1());
  const auto any = s.engine.get_objects_of_category("ANY");
  CHECK(keys(s.engine.is_color(any, "red")) == std::set<std::string>{"T_A"});
  CHECK(s.engine.is_color(any, "chartreuse") == any);
  LogBundle uncolored = s.bundle;
  uncolored.colors.clear();
  Scene u(uncolored);
  CHECK(u.engine.is_color(u.engine.get_objects_of_category("ANY"), "red").empty());
}

TEST_CASE("monotonicity identities") {
  Scene s = scene_of(synth::random_script(11));
  const auto any = s.engine.get_objects_of_category("ANY");
  std::size_t prev = 0;
  for (double d : {1.0, 5.0, 10.0, 20.0, 40.0}) {
    const auto n = s.engine.near_objects(any, any, d, 1, false).pair_count();
    CHECK(n >= prev);
    prev = n;
  }
  prev = std::numeric_limits<std::size_t>::max();
  for (double m : {0.0, 1.0, 2.0, 3.0}) {
    const auto n = s.engine.has_objects_in_relative_direction(any, any, Direction::forward, m, kInf, 50, kInf).pair_count();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("filter property holds for every relational predicate") {
  Scene s = scene_of(synth::random_script(5));
  const auto any = s.engine.get_objects_of_category("ANY");
  const auto veh = s.engine.get_objects_of_category("VEHICLE");
  auto subset = [](const ScenarioSet& a, const ScenarioSet& b) {
    return and2(a.without_relationships(), b.without_relationships()) == a.without_relationships();
  };
  CHECK(subset(s.engine.near_objects(veh, any, 15, 1, false), veh));
  CHECK(subset(s.engine.following(veh, any), veh));
  CHECK(subset(s.engine.facing_toward(veh, any, 45, 50), veh));
  CHECK(subset(s.engine.get_objects_in_relative_direction(veh, any, Direction::left, 0, kInf, 50, kInf), any));
}

TEST_CASE("engine agrees with the brute-force oracle on random scenes") {
  testing::EquivalenceReport report;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto scene = synth::generate_scene(synth::random_script(seed));
    testing::compare_backends(scene.bundle, seed, report);
  }
  const std::string first = report.mismatches.empty() ? std::string() : report.mismatches.front();
  INFO(first);
  CHECK(report.mismatch_count == 0);
  CHECK(report.covered.size() >= 28);
}
