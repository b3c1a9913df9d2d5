#include <doctest.h>

#include "fixtures.hpp"
#include "refmine/oracle.hpp"
#include "refmine/synthgen.hpp"

#include <random>

using namespace refmine;

TEST_CASE("lane assignment on the straight-road template") {
  const HDMap map = synth::build_map("straight_road");
  CHECK(map.assign_lane({10, 2}) == "L1");
  CHECK(map.assign_lane({10, -2}) == "L0");
  CHECK_FALSE(map.assign_lane({0, 50}));
  // Shared L1/L2 boundary: both centerlines 1.75 m away, tie goes to the smaller id.
  CHECK(map.assign_lane({10, 3.5}) == "L1");
  CHECK(map.lane("LB")->lane_type == LaneType::BIKE);
}

TEST_CASE("distance to polygon layers") {
  const HDMap map = synth::build_map("straight_road");
  CHECK(distance_to_layer({62, 0}, map.crossing_layer()) == 0.0);
  CHECK(distance_to_layer({57, 1}, map.crossing_layer()) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(distance_to_layer({0, 0}, PolygonLayer{}) == std::numeric_limits<double>::infinity());
  CHECK(map.intersection_layer().empty());
  CHECK(distance_to_layer({0, 0}, map.drivable_layer()) == 0.0);
  CHECK(distance_to_layer({0, 10}, map.drivable_layer()) == doctest::Approx(3.0));
}

TEST_CASE("lane direction") {
  const HDMap road = synth::build_map("straight_road");
  const auto* l0 = road.lane("L0");
  REQUIRE(l0);
  const double len = l0->centerline_arclength.back();
  for (double s : {0.0, len / 2, len}) {
    const Vec2 d = road.lane_direction("L0", s);
    CHECK(d.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.y == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(road.lane_direction("L2", 1.0).x == doctest::Approx(-1.0));
  CHECK_THROWS_AS(road.lane_direction("nope", 0.0), std::out_of_range);

  // Right-turn arc of the south approach: a quarter circle from heading +y to +x.
  const HDMap junction = synth::build_map("intersection");
  const auto* arc = junction.lane("R_S");
  REQUIRE(arc);
  const Vec2 mid = junction.lane_direction("R_S", arc->centerline_arclength.back() / 2);
  CHECK(mid.x == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(mid.y == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("map JSON round-trip and connectivity") {
  const HDMap map = synth::build_map("intersection");
  const HDMap back = HDMap::from_json(map.to_json());
  REQUIRE(back.lanes().size() == map.lanes().size());
  for (std::size_t i = 0; i < map.lanes().size(); ++i) {
    CHECK(back.lanes()[i].id == map.lanes()[i].id);
    CHECK(back.lanes()[i].centerline == map.lanes()[i].centerline);
  }
  CHECK(back.stop_signs().size() == 4);
  CHECK(back.crossings().size() == 4);
  const auto s_in = *map.lane_index("S_in");
  const auto x_s = *map.lane_index("X_S");
  const auto n_out = *map.lane_index("N_out");
  CHECK(map.lanes_connected(s_in, x_s));
  CHECK(map.lanes_connected(x_s, s_in));
  CHECK(map.lanes_connected(x_s, n_out));
  CHECK_FALSE(map.lanes_connected(s_in, n_out));
  CHECK(map.lane("S_in")->is_intersection == false);
  CHECK(map.lane("X_S")->is_intersection);
}

TEST_CASE("grid-indexed assignment equals brute force and survives rigid transforms") {
  std::mt19937_64 rng(5);
  for (const auto& name : synth::map_templates()) {
    const HDMap map = synth::build_map(name);
    const double theta = 0.7;
    const Vec2 shift{123.0, -45.0};
    const HDMap moved = map.transformed(theta, shift);
    std::uniform_real_distribution<double> ux(-110, 410), uy(-90, 90);
    int hits = 0;
    for (int i = 0; i < 4000; ++i) {
      const Vec2 p{ux(rng), uy(rng)};
      const auto a = map.assign_lane_index(p);
      CHECK(a == oracle_assign_lane(map, p.x, p.y));
      if (a) ++hits;
      const Vec2 q{p.x * std::cos(theta) - p.y * std::sin(theta) + shift.x,
                   p.x * std::sin(theta) + p.y * std::cos(theta) + shift.y};
      const auto b = moved.assign_lane_index(q);
      // Points within rounding distance of a boundary may flip; everything else must agree.
      if (a != b) {
        CHECK(std::min(distance_to_layer(p, PolygonLayer({map.lanes()[a ? *a : *b].polygon})), 1.0) < 1e-9);
      }
    }
    CHECK(hits > 100);
  }
}

TEST_CASE("nearest lane search") {
  const HDMap map = synth::build_map("straight_road");
  CHECK(map.nearest_lane_index({10, 2}, 10.0) == map.lane_index("L1"));
  CHECK(map.nearest_lane_index({10, 9}, 10.0) == map.lane_index("L2"));
  CHECK_FALSE(map.nearest_lane_index({10, 40}, 10.0));
}
