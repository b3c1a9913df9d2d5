#pragma once

#include <string>
#include <vector>

namespace refmine::dsl {

struct KeywordArg;

/// Expression node. Positions are 1-based and ignored by equality.
struct Expr {
  enum class Kind { identifier, string, number, boolean, none, list, call };

  Kind kind = Kind::none;
  std::string text;              ///< identifier name, string value, or number spelling
  double number = 0.0;
  bool boolean = false;
  std::string callee;            ///< call: function name
  std::string wrapper;           ///< call: scenario_not / reverse_relationship, or empty
  std::vector<Expr> args;        ///< call positional args, or list items
  std::vector<KeywordArg> kwargs;
  int line = 0;
  int column = 0;

  bool same_as(const Expr& o) const;
};

struct KeywordArg {
  std::string name;
  Expr value;
  int line = 0;
  int column = 0;
};

/// `target = call` or, when target is empty, the terminal output_scenario call.
struct Statement {
  std::string target;
  Expr call;
  int line = 0;
  int column = 0;

  bool is_output() const { return target.empty(); }
};

struct Program {
  std::vector<Statement> statements;

  /// Structural equality, positions ignored.
  bool same_as(const Program& o) const;
  const Statement* output() const;
};

/// Canonical source text: one statement per line, no comments.
std::string pretty_print(const Program& program);
std::string pretty_print(const Expr& expr);

}  // namespace refmine::dsl
