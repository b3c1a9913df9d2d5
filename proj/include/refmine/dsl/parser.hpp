#pragma once

#include "refmine/dsl/ast.hpp"
#include "refmine/dsl/diagnostic.hpp"

#include <optional>
#include <string_view>

namespace refmine::dsl {

/// Identifiers bound by the host before execution.
inline constexpr std::string_view kPreboundNames[] = {"log_dir", "output_dir", "description"};
bool is_prebound(std::string_view name);

struct ParseResult {
  std::optional<Program> program;  ///< set iff no error diagnostics
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
};

/// Parses the restricted program syntax and resolves names against the
/// function registry: unknown functions and unbound identifiers are errors.
ParseResult parse_program(std::string_view source);

/// Returns the body of the first ``` fenced block (language tag dropped), or
/// the input unchanged when it has no fence.
std::string extract_code_block(std::string_view text);

}  // namespace refmine::dsl
