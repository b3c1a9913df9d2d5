#pragma once

#include "refmine/dsl/ast.hpp"
#include "refmine/dsl/diagnostic.hpp"

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace refmine::synthesis {

struct SynthesisConfig {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string model = "default";
  int max_retries = 3;
  double temperature = 0.0;
  double timeout_s = 120.0;
  double max_requests_per_s = 0.0;  ///< 0 disables the cap
  std::string api_key_env = "REFMINE_API_KEY";

  /// Keys match the field names.
  static SynthesisConfig load(const std::filesystem::path& path);
  static SynthesisConfig parse(const std::string& text);
  void validate() const;
};

struct ChatMessage {
  std::string role;  ///< system, user or assistant
  std::string content;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Returns the reply text. Throws std::runtime_error on transport failure.
  /// Must be safe to call from several threads.
  virtual std::string complete(const std::vector<ChatMessage>& messages, const SynthesisConfig& config) = 0;
};

/// JSON over HTTP: POST {model, messages, temperature}; the reply is read from
/// choices[0].message.content or a top-level "text" field. Plain http only.
class HttpLlmClient final : public LlmClient {
 public:
  std::string complete(const std::vector<ChatMessage>& messages, const SynthesisConfig& config) override;
};

/// Replays canned replies in order; the last one repeats once exhausted.
class ScriptedClient final : public LlmClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies);
  std::string complete(const std::vector<ChatMessage>& messages, const SynthesisConfig& config) override;
  std::size_t calls() const;
  std::vector<std::vector<ChatMessage>> requests() const;

 private:
  std::vector<std::string> replies_;
  std::vector<std::vector<ChatMessage>> requests_;
  mutable std::mutex mu_;
};

/// Delegates to a callback (for per-description mocks).
class CallbackClient final : public LlmClient {
 public:
  using Fn = std::function<std::string(const std::vector<ChatMessage>&)>;
  explicit CallbackClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const std::vector<ChatMessage>& messages, const SynthesisConfig&) override {
    return fn_(messages);
  }

 private:
  Fn fn_;
};

struct PromptExample {
  std::string description;
  std::string program;
};

/// Two small hand-written examples used when no example directory is given.
std::vector<PromptExample> default_examples();

/// Reads every *.py file in `dir` (sorted by name). The description comes from
/// a leading `# Description:` comment, else from the file stem.
std::vector<PromptExample> load_examples(const std::filesystem::path& dir);

/// Fills the prompt template: API listing, object categories, the description,
/// examples, and the single-code-block instruction. Throws
/// std::invalid_argument on an empty description.
std::string build_prompt(const std::string& description, const std::string& api_listing,
                         const std::vector<PromptExample>& examples);

/// The follow-up message sent after a rejected reply.
std::string feedback_message(const std::vector<dsl::Diagnostic>& diagnostics);

struct Attempt {
  std::string reply;
  std::vector<dsl::Diagnostic> diagnostics;  ///< empty for the accepted attempt
};

struct SynthesisResult {
  dsl::Program program;
  std::string source;  ///< extracted code
  std::vector<Attempt> attempts;
};

class SynthesisFailure : public std::runtime_error {
 public:
  SynthesisFailure(std::string description, std::vector<Attempt> attempts);
  const std::vector<Attempt>& attempts() const { return attempts_; }
  const std::vector<dsl::Diagnostic>& last_diagnostics() const { return attempts_.back().diagnostics; }
  const std::string& description() const { return description_; }

 private:
  std::string description_;
  std::vector<Attempt> attempts_;
};

/// Calls the model, extracts the fenced block, parses and validates it; on
/// errors re-prompts with the diagnostics appended, at most max_retries times.
/// Transport errors count as failed attempts. Throws SynthesisFailure.
SynthesisResult synthesize(const std::string& description, LlmClient& client, const SynthesisConfig& config,
                           const std::vector<PromptExample>& examples = default_examples());

struct SuiteOutcome {
  std::string description;
  std::optional<SynthesisResult> result;
  std::vector<Attempt> attempts;  ///< also filled on failure
  bool ok() const { return result.has_value(); }
};

struct FailureStats {
  std::size_t total = 0;
  std::size_t failures = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(total); }
};

/// Synthesizes every description, in parallel, honouring the request-rate cap.
/// Outcomes keep the input order.
std::vector<SuiteOutcome> synthesize_suite(const std::vector<std::string>& descriptions, LlmClient& client,
                                           const SynthesisConfig& config,
                                           const std::vector<PromptExample>& examples = default_examples());

FailureStats failure_stats(const std::vector<SuiteOutcome>& outcomes);

}  // namespace refmine::synthesis
