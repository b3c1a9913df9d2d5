#include "refmine/synthesis.hpp"

#include "refmine/config.hpp"
#include "refmine/dsl/parser.hpp"
#include "refmine/dsl/registry.hpp"
#include "refmine/types.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace refmine::synthesis {

SynthesisConfig SynthesisConfig::parse(const std::string& text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  SynthesisConfig c;
  for (const auto& [k, v] : kv.values()) {
    if (k == "endpoint") {
      c.endpoint = v;
    } else if (k == "model") {
      c.model = v;
    } else if (k == "api_key_env") {
      c.api_key_env = v;
    } else if (k == "max_retries") {
      const double r = kv.get_double(k, 0);
      if (r != static_cast<int>(r)) throw std::invalid_argument("synthesis config: max_retries must be an integer");
      c.max_retries = static_cast<int>(r);
    } else if (k == "temperature") {
      c.temperature = kv.get_double(k, c.temperature);
    } else if (k == "timeout_s") {
      c.timeout_s = kv.get_double(k, c.timeout_s);
    } else if (k == "max_requests_per_s") {
      c.max_requests_per_s = kv.get_double(k, c.max_requests_per_s);
    } else {
      throw std::invalid_argument("synthesis config: unknown key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

SynthesisConfig SynthesisConfig::load(const std::filesystem::path& path) {
  const KeyValueConfig kv = KeyValueConfig::load(path);
  std::string text;
  for (const auto& [k, v] : kv.values()) text += k + " = " + v + "\n";
  return parse(text);
}

void SynthesisConfig::validate() const {
  if (max_retries < 0) throw std::invalid_argument("synthesis config: max_retries must be >= 0");
  if (!(timeout_s > 0)) throw std::invalid_argument("synthesis config: timeout_s must be positive");
  if (!(max_requests_per_s >= 0)) throw std::invalid_argument("synthesis config: max_requests_per_s must be >= 0");
}

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0) {
    throw std::runtime_error("unsupported endpoint '" + url + "' (only http:// is supported)");
  }
  const auto slash = url.find('/', 7);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string HttpLlmClient::complete(const std::vector<ChatMessage>& messages, const SynthesisConfig& config) {
  const Url url = split_url(config.endpoint);
  httplib::Client cli(url.origin);
  const auto secs = std::chrono::duration<double>(config.timeout_s);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(secs));
  httplib::Headers headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  nlohmann::json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  auto res = cli.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw std::runtime_error("request to " + config.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw std::runtime_error("endpoint returned HTTP " + std::to_string(res->status));
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("reply is not JSON: ") + e.what());
  }
  if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
    const auto& c = reply["choices"][0];
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
      return c["message"]["content"].get<std::string>();
    }
  }
  if (reply.contains("text") && reply["text"].is_string()) return reply["text"].get<std::string>();
  throw std::runtime_error("reply has neither choices[0].message.content nor text");
}

ScriptedClient::ScriptedClient(std::vector<std::string> replies) : replies_(std::move(replies)) {
  if (replies_.empty()) throw std::invalid_argument("ScriptedClient needs at least one reply");
}

std::string ScriptedClient::complete(const std::vector<ChatMessage>& messages, const SynthesisConfig&) {
  std::lock_guard lock(mu_);
  const std::size_t i = std::min(requests_.size(), replies_.size() - 1);
  requests_.push_back(messages);
  return replies_[i];
}

std::size_t ScriptedClient::calls() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

std::vector<std::vector<ChatMessage>> ScriptedClient::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::vector<PromptExample> default_examples() {
  return {
      {"vehicle turning left at an intersection",
       "vehicles = get_objects_of_category(log_dir, category='VEHICLE')\n"
       "left_turns = turning(vehicles, log_dir, direction='left')\n"
       "at_junction = on_intersection(left_turns, log_dir)\n"
       "output_scenario(at_junction, description, log_dir, output_dir)\n"},
      {"pedestrian within 5 meters of a moving bus",
       "peds = get_objects_of_category(log_dir, category='PEDESTRIAN')\n"
       "buses = get_objects_of_category(log_dir, category='BUS')\n"
       "moving_buses = has_velocity(buses, log_dir, min_velocity=1.0)\n"
       "peds_near_bus = near_objects(peds, moving_buses, log_dir, distance_thresh=5, min_objects=1)\n"
       "output_scenario(peds_near_bus, description, log_dir, output_dir)\n"},
  };
}

std::vector<PromptExample> load_examples(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".py") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<PromptExample> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw std::runtime_error("cannot read " + f.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    PromptExample ex;
    ex.program = ss.str();
    ex.description = f.stem().string();
    std::istringstream lines(ex.program);
    std::string line;
    const std::string tag = "# Description:";
    while (std::getline(lines, line)) {
      if (line.rfind(tag, 0) == 0) {
        std::string d = line.substr(tag.size());
        const auto b = d.find_first_not_of(' ');
        ex.description = b == std::string::npos ? std::string() : d.substr(b);
        break;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string build_prompt(const std::string& description, const std::string& api_listing,
                         const std::vector<PromptExample>& examples) {
  if (description.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw std::invalid_argument("build_prompt: empty description");
  }
  std::ostringstream os;
  os << "You write short programs that find driving scenarios in a tracked log.\n"
        "These functions are available:\n\n"
     << api_listing << "\nObject categories:\n";
  for (auto name : category_names()) os << "  " << name << "\n";
  os << "  VEHICLE (any vehicle class)\n  ANY (every object)\n\n";
  os << "Write one scenario for this description: " << description << "\n\n";
  os << "Examples:\n";
  for (const auto& ex : examples) {
    os << "\nDescription: " << ex.description << "\n```python\n" << ex.program;
    if (!ex.program.empty() && ex.program.back() != '\n') os << "\n";
    os << "```\n";
  }
  os << "\nRules: reply with code and comments only, inside a single python code block. "
        "No imports, no new functions, no file paths. log_dir, output_dir and description already exist. "
        "Give exactly one program, and give one even when the functions cannot express the description exactly.\n";
  return os.str();
}

std::string feedback_message(const std::vector<dsl::Diagnostic>& diagnostics) {
  return "That program was rejected:\n" + dsl::format_all(diagnostics) +
         "\nReply with a corrected program in one python code block.";
}

SynthesisFailure::SynthesisFailure(std::string description, std::vector<Attempt> attempts)
    : std::runtime_error("synthesis failed for '" + description + "' after " + std::to_string(attempts.size()) +
                         " attempt(s)" +
                         (attempts.empty() || attempts.back().diagnostics.empty()
                              ? std::string()
                              : ": " + attempts.back().diagnostics.front().format())),
      description_(std::move(description)),
      attempts_(std::move(attempts)) {}

SynthesisResult synthesize(const std::string& description, LlmClient& client, const SynthesisConfig& config,
                           const std::vector<PromptExample>& examples) {
  config.validate();
  std::vector<ChatMessage> messages = {{"user", build_prompt(description, dsl::api_listing(), examples)}};
  std::vector<Attempt> attempts;
  for (int k = 0; k <= config.max_retries; ++k) {
    Attempt a;
    try {
      a.reply = client.complete(messages, config);
    } catch (const std::exception& e) {
      a.diagnostics.push_back({dsl::Severity::error, "transport", e.what(), 0, 0, ""});
      attempts.push_back(a);
      continue;
    }
    const std::string code = dsl::extract_code_block(a.reply);
    auto parsed = dsl::parse_program(code);
    a.diagnostics = parsed.diagnostics;
    if (parsed.ok()) {
      auto v = dsl::validate_program(*parsed.program);
      a.diagnostics.insert(a.diagnostics.end(), v.begin(), v.end());
    }
    if (parsed.ok() && !dsl::has_errors(a.diagnostics)) {
      a.diagnostics.clear();
      attempts.push_back(a);
      return {std::move(*parsed.program), code, std::move(attempts)};
    }
    // Only errors go back to the model.
    std::vector<dsl::Diagnostic> errors;
    for (const auto& d : a.diagnostics) {
      if (d.severity == dsl::Severity::error) errors.push_back(d);
    }
    a.diagnostics = errors;
    messages.push_back({"assistant", a.reply});
    messages.push_back({"user", feedback_message(errors)});
    attempts.push_back(std::move(a));
  }
  throw SynthesisFailure(description, std::move(attempts));
}

namespace {

class RateGate {
 public:
  explicit RateGate(double per_s) : per_s_(per_s) {}
  void wait() {
    if (per_s_ <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / per_s_));
      next_ = std::max(next_, now);
      slot = next_;
      next_ += gap;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double per_s_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

class GatedClient final : public LlmClient {
 public:
  GatedClient(LlmClient& inner, RateGate& gate) : inner_(inner), gate_(gate) {}
  std::string complete(const std::vector<ChatMessage>& messages, const SynthesisConfig& config) override {
    gate_.wait();
    return inner_.complete(messages, config);
  }

 private:
  LlmClient& inner_;
  RateGate& gate_;
};

}  // namespace

std::vector<SuiteOutcome> synthesize_suite(const std::vector<std::string>& descriptions, LlmClient& client,
                                           const SynthesisConfig& config,
                                           const std::vector<PromptExample>& examples) {
  RateGate gate(config.max_requests_per_s);
  GatedClient gated(client, gate);
  std::vector<SuiteOutcome> out(descriptions.size());
  const long n = static_cast<long>(descriptions.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    auto& o = out[static_cast<std::size_t>(i)];
    o.description = descriptions[static_cast<std::size_t>(i)];
    try {
      o.result = synthesize(o.description, gated, config, examples);
      o.attempts = o.result->attempts;
    } catch (const SynthesisFailure& f) {
      o.attempts = f.attempts();
    } catch (const std::exception& e) {
      o.attempts.push_back({"", {{dsl::Severity::error, "synthesis", e.what(), 0, 0, ""}}});
    }
  }
  return out;
}

FailureStats failure_stats(const std::vector<SuiteOutcome>& outcomes) {
  FailureStats s;
  s.total = outcomes.size();
  for (const auto& o : outcomes) {
    if (!o.ok()) ++s.failures;
  }
  return s;
}

}  // namespace refmine::synthesis
