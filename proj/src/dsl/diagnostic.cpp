#include "refmine/dsl/diagnostic.hpp"

#include <algorithm>

namespace refmine::dsl {

std::string Diagnostic::format() const {
  std::string out = std::to_string(line) + ":" + std::to_string(column) + ": ";
  out += severity == Severity::error ? "error" : "warning";
  out += "[" + code + "]: " + message;
  return out;
}

nlohmann::json Diagnostic::to_json() const {
  return {{"severity", severity == Severity::error ? "error" : "warning"},
          {"code", code},
          {"message", message},
          {"line", line},
          {"column", column},
          {"token", token}};
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const auto& d) { return d.severity == Severity::error; });
}

std::string format_all(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) out += d.format() + "\n";
  return out;
}

nlohmann::json to_json(const std::vector<Diagnostic>& diags) {
  auto arr = nlohmann::json::array();
  for (const auto& d : diags) arr.push_back(d.to_json());
  return arr;
}

}  // namespace refmine::dsl
