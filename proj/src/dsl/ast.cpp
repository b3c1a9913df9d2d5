#include "refmine/dsl/ast.hpp"

#include <algorithm>

namespace refmine::dsl {

bool Expr::same_as(const Expr& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::identifier:
    case Kind::string: return text == o.text;
    case Kind::number: return number == o.number;
    case Kind::boolean: return boolean == o.boolean;
    case Kind::none: return true;
    case Kind::list:
    case Kind::call: break;
  }
  if (callee != o.callee || wrapper != o.wrapper) return false;
  if (args.size() != o.args.size() || kwargs.size() != o.kwargs.size()) return false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].same_as(o.args[i])) return false;
  }
  for (std::size_t i = 0; i < kwargs.size(); ++i) {
    if (kwargs[i].name != o.kwargs[i].name || !kwargs[i].value.same_as(o.kwargs[i].value)) return false;
  }
  return true;
}

bool Program::same_as(const Program& o) const {
  if (statements.size() != o.statements.size()) return false;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    if (statements[i].target != o.statements[i].target) return false;
    if (!statements[i].call.same_as(o.statements[i].call)) return false;
  }
  return true;
}

const Statement* Program::output() const {
  auto it = std::find_if(statements.begin(), statements.end(), [](const Statement& s) { return s.is_output(); });
  return it == statements.end() ? nullptr : &*it;
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

std::string pretty_print(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::identifier: return e.text;
    case Expr::Kind::string: return quote(e.text);
    case Expr::Kind::number: return e.text;
    case Expr::Kind::boolean: return e.boolean ? "True" : "False";
    case Expr::Kind::none: return "None";
    case Expr::Kind::list: {
      std::string out = "[";
      for (std::size_t i = 0; i < e.args.size(); ++i) out += (i ? ", " : "") + pretty_print(e.args[i]);
      return out + "]";
    }
    case Expr::Kind::call: break;
  }
  std::string out = e.wrapper.empty() ? e.callee : e.wrapper + "(" + e.callee + ")";
  out += "(";
  bool first = true;
  for (const auto& a : e.args) {
    out += (first ? "" : ", ") + pretty_print(a);
    first = false;
  }
  for (const auto& k : e.kwargs) {
    out += (first ? "" : ", ") + k.name + "=" + pretty_print(k.value);
    first = false;
  }
  return out + ")";
}

std::string pretty_print(const Program& program) {
  std::string out;
  for (const auto& s : program.statements) {
    if (!s.is_output()) out += s.target + " = ";
    out += pretty_print(s.call) + "\n";
  }
  return out;
}

}  // namespace refmine::dsl
