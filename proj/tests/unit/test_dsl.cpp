#include <doctest.h>

#include "fixtures.hpp"
#include "refmine/dsl/interpreter.hpp"
#include "refmine/dsl/parser.hpp"
#include "refmine/dsl/registry.hpp"
#include "refmine/oracle.hpp"
#include "refmine/synthgen.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

using namespace refmine;
using namespace refmine::dsl;

namespace {

std::vector<std::filesystem::path> fixture_programs() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(testing::source_path("fixtures/programs"))) {
    if (e.path().extension() == ".py") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Program must_parse(std::string_view src) {
  auto r = parse_program(src);
  INFO(format_all(r.diagnostics));
  REQUIRE(r.ok());
  return *r.program;
}

bool has_code(const std::vector<Diagnostic>& d, std::string_view code) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.code == code; });
}

std::set<std::string> keys(const ScenarioSet& s) {
  std::set<std::string> out;
  for (const auto& [id, e] : s) out.insert(id);
  return out;
}

constexpr const char* kAny =
    "objs = get_objects_of_category(log_dir, category='ANY')\n"
    "output_scenario(objs, 'everything', log_dir, output_dir)\n";

}  // namespace

TEST_CASE("the six fixture programs parse, validate, round-trip and execute") {
  const auto files = fixture_programs();
  REQUIRE(files.size() == 6);
  const auto scene = synth::generate_scene(synth::random_script(21));
  const Engine engine(scene.bundle);
  for (const auto& f : files) {
    CAPTURE(f.filename().string());
    const auto src = testing::read_text(f);
    const Program p = must_parse(src);
    CHECK(validate_program(p).empty());
    const Program again = must_parse(pretty_print(p));
    CHECK(again.same_as(p));
    CHECK(pretty_print(again) == pretty_print(p));
    CHECK_NOTHROW(execute_program(p, engine));
  }
}

TEST_CASE("accelerating right lane change program shape") {
  const Program p = must_parse(testing::read_text(testing::source_path("fixtures/programs/accelerating_right_lane_change.py")));
  REQUIRE(p.statements.size() == 5);
  CHECK(std::count_if(p.statements.begin(), p.statements.end(), [](const Statement& s) { return !s.is_output(); }) == 4);
  REQUIRE(p.output() != nullptr);
  CHECK(p.output() == &p.statements.back());
  CHECK(p.statements[1].call.callee == "accelerating");
}

TEST_CASE("forbidden constructs are rejected with positions") {
  const auto imp = parse_program("import os\n");
  CHECK_FALSE(imp.ok());
  REQUIRE_FALSE(imp.diagnostics.empty());
  CHECK(imp.diagnostics[0].code == "forbidden-import");
  CHECK(imp.diagnostics[0].line == 1);
  CHECK(imp.diagnostics[0].message.find("imports not allowed") != std::string::npos);

  for (const char* bad : {"def f():\n  pass\n", "for x in y:\n  pass\n", "if x:\n  pass\n",
                          "x = a.b\n", "x = has_velocity(log_dir) + 1\n", "x = (\n"}) {
    CAPTURE(bad);
    const auto r = parse_program(bad);
    CHECK_FALSE(r.ok());
    CHECK(has_errors(r.diagnostics));
    CHECK(r.diagnostics[0].line >= 1);
  }
}

TEST_CASE("name resolution diagnostics") {
  const auto unknown = parse_program("x = not_a_function(log_dir)\noutput_scenario(x, 'd', log_dir, output_dir)\n");
  CHECK_FALSE(unknown.ok());
  CHECK(has_code(unknown.diagnostics, "unknown-function"));
  CHECK(format_all(unknown.diagnostics).find("get_objects_of_category") != std::string::npos);

  const auto unbound = parse_program("x = has_velocity(ghost, log_dir)\noutput_scenario(x, 'd', log_dir, output_dir)\n");
  CHECK_FALSE(unbound.ok());
  CHECK(has_code(unbound.diagnostics, "unbound-identifier"));
  CHECK(format_all(unbound.diagnostics).find("ghost") != std::string::npos);

  CHECK_FALSE(parse_program("x = get_objects_of_category(log_dir, category='ANY')\n").ok());
  CHECK_FALSE(parse_program(std::string(kAny) + std::string(kAny)).ok());
}

TEST_CASE("validation catches enum, range and arity problems") {
  auto diag = [](const std::string& call) {
    return validate_program(must_parse("v = get_objects_of_category(log_dir, category='VEHICLE')\nx = " + call +
                                       "\noutput_scenario(x, 'd', log_dir, output_dir)\n"));
  };
  CHECK(diag("turning(v, log_dir, direction='left')").empty());
  CHECK_FALSE(diag("turning(v, log_dir, direction='sideways')").empty());
  CHECK_FALSE(diag("has_velocity(v, log_dir, min_velocity=5, max_velocity=1)").empty());
  CHECK_FALSE(diag("has_velocity(v, log_dir, speed=3)").empty());
  CHECK_FALSE(diag("near_objects(v)").empty());
  CHECK_FALSE(diag("is_category(v, log_dir, category='DRAGON')").empty());
  CHECK_FALSE(diag("on_lane_type(v, log_dir, lane_type='TRAIN')").empty());
}

TEST_CASE("unused bindings only lint") {
  const Program p = must_parse(
      "a = get_objects_of_category(log_dir, category='BUS')\n"
      "b = get_objects_of_category(log_dir, category='ANY')\n"
      "output_scenario(b, 'd', log_dir, output_dir)\n");
  CHECK(validate_program(p).empty());
  const auto lint = lint_program(p);
  REQUIRE(lint.size() == 1);
  CHECK(lint[0].severity == Severity::warning);
  CHECK(lint[0].message.find('a') != std::string::npos);
}

TEST_CASE("execution on fixtures") {
  const auto s1 = synth::generate_scene(synth::fixture_s1());
  const Engine e1(s1.bundle);
  const auto all = execute_program(must_parse(kAny), e1);
  CHECK(all.description == "everything");
  CHECK(keys(all.scenario).size() == s1.bundle.tracks.size());
  const auto again = execute_program(must_parse(kAny), e1);
  CHECK(again.scenario == all.scenario);

  const auto none = execute_program(must_parse("x = get_objects_of_category(log_dir, category='BUS')\n"
                                               "output_scenario(x, 'no buses', log_dir, output_dir)\n"),
                                    e1);
  CHECK(none.scenario.empty());

  const auto bikes = synth::generate_scene(synth::fixture_bike_group());
  const Engine eb(bikes.bundle);
  const OracleBackend ob(bikes.bundle);
  const Program group = must_parse(testing::read_text(testing::source_path("fixtures/programs/moving_bicyclist_group.py")));
  const auto got = execute_program(group, eb);
  CHECK(keys(got.scenario) == std::set<std::string>{"B1", "B2", "B3"});
  CHECK(got.scenario == execute_program(group, ob).scenario);
}

TEST_CASE("runtime errors carry the statement index") {
  const auto s1 = synth::generate_scene(synth::fixture_s1());
  const Engine e1(s1.bundle);
  ExecOptions tiny;
  tiny.pair_budget = 3;
  try {
    execute_program(must_parse(kAny), e1, tiny);
    FAIL("expected an ExecutionError");
  } catch (const ExecutionError& err) {
    CHECK(err.statement() == 0);
    CHECK_FALSE(err.diagnostic().code.empty());
  }
}

TEST_CASE("code block extraction") {
  CHECK(extract_code_block("text\n```python\nx = 1\n```\nmore") == "x = 1\n");
  CHECK(extract_code_block("```\na\n```\n```\nb\n```") == "a\n");
  CHECK(extract_code_block("plain") == "plain");
}

TEST_CASE("higher-order wrappers") {
  const Program p = must_parse(
      "v = get_objects_of_category(log_dir, category='VEHICLE')\n"
      "moving = scenario_not(stationary)(v, log_dir)\n"
      "ahead = reverse_relationship(has_objects_in_relative_direction)(v, v, log_dir, direction='forward')\n"
      "output_scenario(scenario_or([moving, ahead]), 'd', log_dir, output_dir)\n");
  CHECK(p.statements[1].call.wrapper == "scenario_not");
  CHECK(p.statements[2].call.wrapper == "reverse_relationship");
  CHECK(validate_program(p).empty());
  CHECK(must_parse(pretty_print(p)).same_as(p));
}
