#pragma once

#include "refmine/dsl/ast.hpp"
#include "refmine/dsl/diagnostic.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace refmine::dsl {

enum class ParamKind {
  scenario,       ///< scenario dictionary
  scenario_list,  ///< list of scenario dictionaries
  log_dir,
  output_dir,
  category,
  text,           ///< free string (description, color)
  choice,         ///< string from `choices`
  optional_choice,///< string from `choices` or None
  number,
  count,          ///< non-negative number (may be inf)
  boolean,
};

using Literal = std::variant<std::monostate, bool, double, std::string>;

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::number;
  bool required = true;
  Literal fallback;
  std::vector<std::string> choices;
};

struct FunctionSpec {
  std::string name;
  std::vector<ParamSpec> params;
  bool relational = false;  ///< takes (track_candidates, related_candidates, ...)
  bool composable = false;  ///< first parameter is a scenario that results are drawn from
  bool is_output = false;
  bool is_combinator = false;

  const ParamSpec* param(std::string_view name) const;
  std::optional<std::size_t> param_index(std::string_view name) const;
};

/// The full function table: atomic predicates, combinators and output_scenario.
const std::vector<FunctionSpec>& registry();
const FunctionSpec* find_function(std::string_view name);
std::string registry_names();  ///< comma-separated, sorted

inline constexpr std::string_view kWrappers[] = {"scenario_not", "reverse_relationship"};
bool is_wrapper(std::string_view name);

/// Positional + keyword arguments matched to parameters; null for defaults.
struct BoundArgs {
  std::vector<const Expr*> values;
};

/// Matches call arguments to `spec`. Appends diagnostics on arity or keyword errors.
std::optional<BoundArgs> bind_arguments(const FunctionSpec& spec, const Expr& call, std::vector<Diagnostic>& out);

/// Arity, keyword, type, enum and literal-range checks. Empty iff valid.
std::vector<Diagnostic> validate_program(const Program& program);

/// Non-fatal findings such as unused bindings.
std::vector<Diagnostic> lint_program(const Program& program);

/// Human-readable API listing used in synthesis prompts.
std::string api_listing();

}  // namespace refmine::dsl
