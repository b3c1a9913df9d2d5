#pragma once

#include "refmine/dsl/ast.hpp"
#include "refmine/dsl/interpreter.hpp"
#include "refmine/postprocess.hpp"
#include "refmine/predicates.hpp"

#include <optional>
#include <string>
#include <vector>

namespace refmine {

struct MiningOptions {
  EngineConstants constants;
  PostprocessConfig post;
  dsl::ExecOptions exec;
  bool parallel = true;  ///< false runs the serial reference path
};

struct MiningJob {
  std::string description;
  const dsl::Program* program = nullptr;
};

struct MiningResult {
  std::string description;
  std::string log_id;
  std::optional<ScenarioSet> scenario;  ///< unset when execution failed
  std::string error;
  double seconds = 0.0;
};

/// Executes on `engine` (built over the top-K filtered bundle), then
/// postprocesses against that bundle. Throws dsl::ExecutionError.
ScenarioSet mine_one(const dsl::Program& program, const std::string& description, const LogBundle& filtered,
                     const PredicateBackend& engine, const MiningOptions& options = {});

/// The same pipeline with the brute-force oracle as the backend; used to label
/// ground truth.
ScenarioSet reference_mine(const dsl::Program& program, const std::string& description, const LogBundle& bundle,
                           const MiningOptions& options = {});

/// Every job on every log. Result index = log * jobs.size() + job. Logs are
/// spread over threads; each log's engine is built once and shared by its jobs.
std::vector<MiningResult> mine_all(const std::vector<MiningJob>& jobs, const std::vector<const LogBundle*>& logs,
                                   const MiningOptions& options = {});

}  // namespace refmine
