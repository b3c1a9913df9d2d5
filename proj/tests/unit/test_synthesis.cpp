#include <doctest.h>

#include "fixtures.hpp"
#include "refmine/dsl/parser.hpp"
#include "refmine/dsl/registry.hpp"
#include "refmine/synthesis.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "json.hpp"

using namespace refmine;
using namespace refmine::synthesis;

namespace {

std::string fenced(const std::string& code) { return "Here you go.\n```python\n" + code + "```\n"; }

std::string valid_program() {
  return testing::read_text(testing::source_path("fixtures/programs/moving_bicyclist_group.py"));
}

const std::vector<PromptExample> kExamples{
    {"a parked bus", "b = get_objects_of_category(log_dir, category='BUS')\n"
                     "output_scenario(stationary(b, log_dir), description, log_dir, output_dir)\n"}};

}  // namespace

TEST_CASE("prompt template") {
  const auto p = build_prompt("x", dsl::api_listing(), kExamples);
  CHECK(p.find(dsl::api_listing()) != std::string::npos);
  CHECK(p.find(": x\n") != std::string::npos);
  CHECK(p.find("REGULAR_VEHICLE") != std::string::npos);
  CHECK(p.find("a parked bus") != std::string::npos);
  CHECK_THROWS_AS(build_prompt("", dsl::api_listing(), kExamples), std::invalid_argument);
  CHECK_THROWS_AS(build_prompt("  \n", dsl::api_listing(), kExamples), std::invalid_argument);

  // golden rendering with fixed placeholders; REFMINE_UPDATE_GOLDEN=1 rewrites it
  const auto golden = testing::source_path("tests/golden/prompt.txt");
  const auto rendered = build_prompt("{description}", "{api_listing}\n", kExamples);
  if (std::getenv("REFMINE_UPDATE_GOLDEN")) std::ofstream(golden, std::ios::binary) << rendered;
  CHECK(rendered == testing::read_text(golden));
}

TEST_CASE("valid reply on the first attempt") {
  ScriptedClient client({fenced(valid_program())});
  const auto r = synthesize("group of bicyclists", client, {}, kExamples);
  CHECK(r.attempts.size() == 1);
  CHECK(client.calls() == 1);
  CHECK(r.program.output() != nullptr);
  CHECK(r.source == valid_program());
}

TEST_CASE("one rejected reply then success takes exactly two attempts") {
  ScriptedClient client({fenced("import os\n"), fenced(valid_program())});
  const auto r = synthesize("group of bicyclists", client, {}, kExamples);
  REQUIRE(r.attempts.size() == 2);
  CHECK(client.calls() == 2);
  CHECK(r.attempts[0].diagnostics.front().code == "forbidden-import");
  CHECK(r.attempts[1].diagnostics.empty());
  const auto reqs = client.requests();
  REQUIRE(reqs.size() == 2);
  REQUIRE(reqs[1].size() == 3);
  CHECK(reqs[1][1].role == "assistant");
  CHECK(reqs[1][1].content == fenced("import os\n"));
  CHECK(reqs[1][2].content.find("forbidden-import") != std::string::npos);
  CHECK(reqs[1][2].content == feedback_message(r.attempts[0].diagnostics));
}

TEST_CASE("retries are bounded") {
  ScriptedClient client({fenced("x = nope(log_dir)\n")});
  SynthesisConfig cfg;
  cfg.max_retries = 2;
  try {
    synthesize("anything", client, cfg, kExamples);
    FAIL("expected SynthesisFailure");
  } catch (const SynthesisFailure& f) {
    CHECK(f.attempts().size() == 3);
    CHECK(client.calls() == 3);
    CHECK_FALSE(f.last_diagnostics().empty());
    CHECK(f.description() == "anything");
  }
  // validation errors, not just parse errors, trigger a retry
  ScriptedClient enum_client({fenced("v = get_objects_of_category(log_dir, category='VEHICLE')\n"
                                     "output_scenario(turning(v, log_dir, direction='sideways'), description, "
                                     "log_dir, output_dir)\n"),
                              fenced(valid_program())});
  CHECK(synthesize("turning", enum_client, {}, kExamples).attempts.size() == 2);
}

TEST_CASE("transport errors count as attempts") {
  std::atomic<int> n{0};
  CallbackClient flaky([&](const std::vector<ChatMessage>&) -> std::string {
    if (n++ == 0) throw std::runtime_error("connection reset");
    return fenced(valid_program());
  });
  const auto r = synthesize("bikes", flaky, {}, kExamples);
  CHECK(r.attempts.size() == 2);
  CHECK(r.attempts[0].diagnostics.front().code == "transport");
}

TEST_CASE("suite failure rate") {
  CallbackClient client([](const std::vector<ChatMessage>& m) -> std::string {
    const bool bad = m.front().content.find("hopeless") != std::string::npos;
    return fenced(bad ? std::string("def f():\n  pass\n") : valid_program());
  });
  SynthesisConfig cfg;
  cfg.max_retries = 1;
  const std::vector<std::string> descs{"ok one", "hopeless one", "ok two", "hopeless two", "ok three"};
  const auto out = synthesize_suite(descs, client, cfg, kExamples);
  REQUIRE(out.size() == 5);
  for (std::size_t i = 0; i < descs.size(); ++i) {
    CHECK(out[i].description == descs[i]);
    CHECK(out[i].ok() == (descs[i].find("hopeless") == std::string::npos));
  }
  CHECK(out[1].attempts.size() == 2);
  const auto stats = failure_stats(out);
  CHECK(stats.total == 5);
  CHECK(stats.failures == 2);
  CHECK(stats.rate() == 2.0 / 5.0);
  CHECK(failure_stats({}).rate() == 0.0);
}

TEST_CASE("examples directory") {
  const auto ex = load_examples(testing::source_path("fixtures/programs"));
  REQUIRE(ex.size() == 6);
  CHECK(ex[0].description == "accelerating vehicle changing lanes to the right");
  CHECK(default_examples().size() == 2);
  for (const auto& e : default_examples()) CHECK(dsl::parse_program(e.program).ok());
}

TEST_CASE("config parsing") {
  const auto c = SynthesisConfig::parse("model = m1\nmax_retries = 5\nendpoint = http://localhost:1/x\n");
  CHECK(c.model == "m1");
  CHECK(c.max_retries == 5);
  CHECK_THROWS(SynthesisConfig::parse("max_retries = 1.5\n"));
  CHECK_THROWS(SynthesisConfig::parse("colour = blue\n"));
  CHECK_THROWS(SynthesisConfig::parse("max_retries = -1\n"));
}

TEST_CASE("HTTP client against a local server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  nlohmann::json last;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    last = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    const nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", fenced(valid_program())}}}}}}};
    ++hits;
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("nope", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  SynthesisConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model = "tiny";
  cfg.api_key_env = "REFMINE_TEST_KEY";
  setenv("REFMINE_TEST_KEY", "secret", 1);
  HttpLlmClient client;
  const auto r = synthesize("bikes", client, cfg, kExamples);
  CHECK(r.attempts.size() == 1);
  CHECK(hits == 1);
  CHECK(last["model"] == "tiny");
  CHECK(last["messages"][0]["role"] == "user");
  CHECK(last["temperature"] == 0.0);
  CHECK(auth == "Bearer secret");

  SynthesisConfig broken = cfg;
  broken.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  broken.max_retries = 0;
  CHECK_THROWS_AS(synthesize("bikes", client, broken, kExamples), SynthesisFailure);
  SynthesisConfig https = cfg;
  https.endpoint = "https://example.invalid/v1";
  CHECK_THROWS(client.complete({{"user", "hi"}}, https));

  server.stop();
  th.join();
}
