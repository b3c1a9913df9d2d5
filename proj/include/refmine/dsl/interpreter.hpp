#pragma once

#include "refmine/dsl/ast.hpp"
#include "refmine/dsl/diagnostic.hpp"
#include "refmine/predicates.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

namespace refmine::dsl {

struct ExecOptions {
  std::chrono::milliseconds call_timeout{30'000};
  std::size_t pair_budget = 10'000'000;  ///< referred pairs + relationship triples per call
  std::string description;               ///< value bound to the `description` identifier
};

struct ExecutionResult {
  ScenarioSet scenario;
  std::string description;
};

class ExecutionError : public std::runtime_error {
 public:
  ExecutionError(std::size_t statement, Diagnostic diag);
  std::size_t statement() const { return statement_; }
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  std::size_t statement_;
  Diagnostic diag_;
};

/// Evaluates a validated program against one backend. Statements run in order in
/// a single environment. The wall-time budget is checked as each call returns.
ExecutionResult execute_program(const Program& program, const PredicateBackend& backend,
                                const ExecOptions& options = {});

}  // namespace refmine::dsl
