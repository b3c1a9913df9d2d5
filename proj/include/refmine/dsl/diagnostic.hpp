#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace refmine::dsl {

enum class Severity { error, warning };

/// Machine-readable finding. `code` is a stable kebab-case identifier
/// (syntax, forbidden-import, unknown-function, unbound-identifier, ...).
struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  int line = 0;
  int column = 0;
  std::string token;

  /// "line:col: error[code]: message"
  std::string format() const;
  nlohmann::json to_json() const;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

bool has_errors(const std::vector<Diagnostic>& diags);
std::string format_all(const std::vector<Diagnostic>& diags);
nlohmann::json to_json(const std::vector<Diagnostic>& diags);

}  // namespace refmine::dsl
