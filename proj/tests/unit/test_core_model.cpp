#include <doctest.h>

#include "fixtures.hpp"
#include "refmine/oracle.hpp"
#include "refmine/predicates.hpp"
#include "refmine/synthgen.hpp"

#include <random>
#include <set>

using namespace refmine;
using refmine::testing::sec;

namespace {

ScenarioSet set_of(std::initializer_list<std::pair<std::string, std::vector<Timestamp>>> entries) {
  ScenarioSet s;
  for (const auto& [id, ts] : entries) {
    for (Timestamp t : ts) s.add(id, t);
  }
  return s;
}

std::set<std::string> keys(const ScenarioSet& s) {
  std::set<std::string> out;
  for (const auto& [id, e] : s) out.insert(id);
  return out;
}

}  // namespace

TEST_CASE("category names round-trip and super-categories expand") {
  for (auto name : category_names()) {
    const auto c = parse_category(name);
    REQUIRE(c);
    CHECK(to_string(*c) == name);
  }
  CHECK(category_names().size() == kCategoryCount);
  CHECK(expand_category("ANY").size() == kCategoryCount);
  const auto vehicles = expand_category("VEHICLE");
  CHECK(std::find(vehicles.begin(), vehicles.end(), Category::REGULAR_VEHICLE) != vehicles.end());
  CHECK(std::find(vehicles.begin(), vehicles.end(), Category::BUS) != vehicles.end());
  CHECK(std::find(vehicles.begin(), vehicles.end(), Category::PEDESTRIAN) == vehicles.end());
  CHECK_THROWS_AS(expand_category("UNICORN"), std::invalid_argument);
  CHECK_FALSE(parse_category("regular_vehicle"));
}

TEST_CASE("normalize_angle wraps into (-pi, pi]") {
  CHECK(normalize_angle(0.0) == 0.0);
  CHECK(normalize_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("TimeSet keeps values sorted and unique") {
  TimeSet a{5, 1, 3, 3};
  CHECK(a.values() == std::vector<Timestamp>{1, 3, 5});
  a.insert(2);
  a.insert(3);
  a.erase(5);
  CHECK(a.values() == std::vector<Timestamp>{1, 2, 3});
  const TimeSet b{2, 3, 4};
  CHECK(TimeSet::set_union(a, b).values() == std::vector<Timestamp>{1, 2, 3, 4});
  CHECK(TimeSet::set_intersection(a, b).values() == std::vector<Timestamp>{2, 3});
  CHECK(TimeSet::set_difference(a, b).values() == std::vector<Timestamp>{1});
}

TEST_CASE("relationships imply referred timestamps and are clipped on normalize") {
  ScenarioSet s;
  s.add_relationship("v", "p", 7);
  CHECK(s.contains("v", 7));
  CHECK(s.find("v")->related.at("p").contains(7));
  CHECK(s.pair_count() == 1);
  CHECK(s.relationship_count() == 1);
  CHECK(s.without_relationships().relationship_count() == 0);
}

TEST_CASE("scenario_and") {
  const ScenarioSet x = set_of({{"a", {1, 2, 3}}, {"b", {4}}});
  const ScenarioSet empty;
  const std::vector<ScenarioSet> one{x};
  CHECK(scenario_and(one) == x);
  const std::vector<ScenarioSet> with_empty{x, empty};
  CHECK(scenario_and(with_empty).empty());
  CHECK_THROWS_AS(scenario_and(std::vector<ScenarioSet>{}), std::invalid_argument);

  // Relationships are unioned, then clipped to the surviving pairs.
  ScenarioSet p, q;
  p.add_relationship("a", "r1", 1);
  p.add_relationship("a", "r1", 2);
  q.add("a", 2);
  q.add_relationship("a", "r2", 2);
  const std::vector<ScenarioSet> pq{p, q};
  const auto r = scenario_and(pq);
  CHECK(r.find("a")->timestamps.values() == std::vector<Timestamp>{2});
  CHECK(r.find("a")->related.at("r1").values() == std::vector<Timestamp>{2});
  CHECK(r.find("a")->related.at("r2").values() == std::vector<Timestamp>{2});
}

TEST_CASE("scenario_or") {
  const ScenarioSet x = set_of({{"a", {1, 2}}});
  const ScenarioSet y = set_of({{"a", {2, 3}}, {"b", {5}}});
  const std::vector<ScenarioSet> xx{x, x};
  CHECK(scenario_or(xx) == x);
  const std::vector<ScenarioSet> xe{x, ScenarioSet{}};
  CHECK(scenario_or(xe) == x);
  const std::vector<ScenarioSet> xy{x, y};
  CHECK(scenario_or(xy) == set_of({{"a", {1, 2, 3}}, {"b", {5}}}));
}

TEST_CASE("scenario_not") {
  ScenarioSet x = set_of({{"a", {1, 2}}, {"b", {3}}});
  x.add_relationship("a", "b", 1);
  CHECK(scenario_not(x, x).empty());
  const auto all = scenario_not(x, ScenarioSet{});
  CHECK(all == x.without_relationships());
  CHECK(scenario_not(x, set_of({{"a", {2}}})) == set_of({{"a", {1}}, {"b", {3}}}));
}

TEST_CASE("reverse_relationship transposes triples") {
  ScenarioSet x;
  for (Timestamp t = 1; t <= 5; ++t) x.add("v1", t);
  x.add_relationship("v1", "p1", 2);
  x.add_relationship("v1", "p1", 3);
  ScenarioSet expected;
  expected.add_relationship("p1", "v1", 2);
  expected.add_relationship("p1", "v1", 3);
  CHECK(reverse_relationship(x) == expected);

  // Involution when every stamp carries a relationship.
  ScenarioSet y;
  y.add_relationship("a", "b", 1);
  y.add_relationship("a", "c", 2);
  y.add_relationship("b", "a", 2);
  CHECK(reverse_relationship(reverse_relationship(y)) == y);
}

TEST_CASE("combinators match explicit triple-set algebra on random inputs") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const std::vector<Timestamp> stamps{1, 2, 3, 4, 5, 6};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScenarioSet> in;
    const int n = 1 + trial % 4;
    for (int k = 0; k < n; ++k) in.push_back(refmine::testing::random_scenario(rng, ids, stamps));
    CHECK(scenario_and(in) == oracle_and(in));
    CHECK(scenario_or(in) == oracle_or(in));
    std::vector<ScenarioSet> rev(in.rbegin(), in.rend());
    CHECK(scenario_or(rev) == scenario_or(in));
    CHECK(scenario_and(rev) == scenario_and(in));
  }
}

TEST_CASE("S1: moving vehicles in lane L1 are T_A and T_B over their full spans") {
  const auto scene = synth::generate_scene(synth::fixture_s1());
  const auto& bundle = scene.bundle;
  const Engine engine(bundle);
  const auto vehicles = engine.get_objects_of_category("VEHICLE");
  const auto moving = engine.has_velocity(vehicles, 0.5, kInf);
  const auto l1 = *bundle.map.lane_index("L1");
  ScenarioSet in_l1;
  for (const auto& t : bundle.tracks) {
    for (const auto& b : t.boxes) {
      if (oracle_assign_lane(bundle.map, b.translation.x, b.translation.y) == l1) in_l1.add(t.id, b.timestamp);
    }
  }
  const std::vector<ScenarioSet> args{moving, in_l1};
  const auto r = scenario_and(args);
  CHECK(keys(r) == std::set<std::string>{"T_A", "T_B"});
  for (const char* id : {"T_A", "T_B"}) {
    CHECK(r.find(id)->timestamps.size() == bundle.track(id)->boxes.size());
  }

  // Complement of stationary vehicles is the moving ones.
  const auto not_stationary = scenario_not(vehicles, engine.stationary(vehicles));
  CHECK(keys(not_stationary) == std::set<std::string>{"T_A", "T_B", "T_D"});
}
