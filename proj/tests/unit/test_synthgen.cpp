#include <doctest.h>

#include "equivalence.hpp"
#include "fixtures.hpp"
#include "refmine/dsl/parser.hpp"
#include "refmine/ingest.hpp"
#include "refmine/kinematics.hpp"
#include "refmine/oracle.hpp"
#include "refmine/synthgen.hpp"

#include <cmath>
#include <set>

using namespace refmine;
namespace fs = std::filesystem;

namespace {

std::set<std::string> ids(const LogBundle& b) {
  std::set<std::string> out;
  for (const auto& t : b.tracks) {
    if (t.id != kEgoTrackId) out.insert(t.id);
  }
  return out;
}

std::string dir_bytes(const fs::path& dir) {
  std::string all;
  for (const char* f : {"tracks.csv", "poses.csv", "map.json", "colors.csv"}) {
    if (fs::exists(dir / f)) all += std::string(f) + "\n" + testing::read_text(dir / f);
  }
  return all;
}

}  // namespace

TEST_CASE("fixtures have the documented cast") {
  const auto s1 = synth::generate_scene(synth::fixture_s1());
  CHECK(ids(s1.bundle) == std::set<std::string>{"T_A", "T_B", "T_C", "T_D"});
  CHECK(s1.bundle.tracks.size() == 5);
  CHECK(s1.ground_truth.size() == synth::fixture_s1().queries.size());

  const auto s2 = synth::generate_scene(synth::fixture_s2());
  CHECK(ids(s2.bundle) == std::set<std::string>{"P", "V"});
  const Engine engine(s2.bundle);
  const auto any = engine.get_objects_of_category("ANY");
  const auto crossed = engine.being_crossed_by(engine.is_category(any, "REGULAR_VEHICLE"),
                                               engine.is_category(any, "PEDESTRIAN"), Direction::forward,
                                               CrossingSense::either, 10, 5);
  CHECK(crossed.contains("V"));
}

TEST_CASE("generation is deterministic") {
  const auto dir = testing::scratch_dir("synthgen_det");
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const auto script = synth::random_script(seed);
    synth::write_scene(dir / "a", synth::generate_scene(script));
    synth::write_scene(dir / "b", synth::generate_scene(synth::random_script(seed)));
    CHECK(dir_bytes(dir / "a") == dir_bytes(dir / "b"));
    CHECK(script.to_json() == synth::random_script(seed).to_json());
    fs::remove_all(dir / "a");
    fs::remove_all(dir / "b");
  }
  CHECK(synth::random_script(1).to_json() != synth::random_script(2).to_json());
  fs::remove_all(dir);
}

TEST_CASE("golden S1 and S2 bundles are reproduced") {
  const auto dir = testing::scratch_dir("synthgen_golden");
  for (const char* name : {"S1", "S2"}) {
    CAPTURE(name);
    const fs::path golden = testing::source_path(std::string("fixtures/scenes/") + name);
    const auto script = synth::SceneScript::load(golden / "script.json");
    CHECK(script.to_json() == (std::string(name) == "S1" ? synth::fixture_s1() : synth::fixture_s2()).to_json());
    synth::write_scene(dir / name, synth::generate_scene(script));
    CHECK(dir_bytes(dir / name) == dir_bytes(golden / "log"));
    const LogBundle loaded = load_log_bundle(golden / "log");
    CHECK(loaded.tracks.size() == synth::generate_scene(script).bundle.tracks.size());
  }
  fs::remove_all(dir);
}

TEST_CASE("script JSON round trip and validation") {
  const auto s = synth::random_script(3);
  const auto back = synth::SceneScript::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());

  auto bad = synth::fixture_s1();
  bad.agents[0].motion.kind = "teleport";
  CHECK_THROWS_AS(synth::generate_scene(bad), std::invalid_argument);
  auto dup = synth::fixture_s1();
  dup.agents.push_back(dup.agents[0]);
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
  CHECK_THROWS(synth::build_map("moon_base"));
  for (const auto& t : synth::map_templates()) CHECK_NOTHROW(synth::build_map(t));
}

TEST_CASE("random scenes are physically sane") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto script = synth::random_script(seed);
    CHECK(script.agents.size() <= 9);
    CHECK(script.duration_s >= 5.0);
    CHECK(script.duration_s <= 20.0);
    const auto scene = synth::generate_scene(script);
    for (const auto& t : scene.bundle.tracks) {
      for (const auto& st : estimate_states(t)) {
        // jitter adds a little apparent speed on top of the scripted <= 30 m/s
        CHECK(st.speed <= 31.0);
        CHECK(std::isfinite(st.accel_forward));
        CHECK(std::isfinite(st.accel_lateral));
      }
    }
  }
}

TEST_CASE("oracle ground truth matches the engine on the fixtures") {
  for (const auto& script : {synth::fixture_s1(), synth::fixture_s1_lane_change(), synth::fixture_s2(),
                             synth::fixture_bike_group()}) {
    CAPTURE(script.log_id);
    const auto scene = synth::generate_scene(script);
    REQUIRE(scene.ground_truth.size() == script.queries.size());
    for (std::size_t i = 0; i < script.queries.size(); ++i) {
      const auto parsed = dsl::parse_program(script.queries[i].source);
      REQUIRE(parsed.ok());
      CHECK(synth::oracle_evaluate(*parsed.program, scene.bundle) == scene.ground_truth[i]);
    }
    testing::EquivalenceReport report;
    testing::compare_backends(scene.bundle, 99, report);
    CHECK(report.mismatch_count == 0);
  }
  const LogBundle empty = testing::bundle_of({});
  const OracleBackend oracle(empty);
  CHECK(oracle.get_objects_of_category("ANY").empty());
}
