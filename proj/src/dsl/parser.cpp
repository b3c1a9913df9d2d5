#include "refmine/dsl/parser.hpp"

#include "refmine/dsl/registry.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <utility>

namespace refmine::dsl {

bool is_prebound(std::string_view name) {
  return std::find(std::begin(kPreboundNames), std::end(kPreboundNames), name) != std::end(kPreboundNames);
}

namespace {

enum class Tok { name, string, number, lparen, rparen, lbrack, rbrack, comma, equals, dot, op, newline, end, bad };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

struct Forbidden {
  std::string_view code;
  std::string_view message;
};

const std::map<std::string_view, Forbidden>& forbidden_keywords() {
  static const std::map<std::string_view, Forbidden> table = {
      {"import", {"forbidden-import", "imports not allowed"}},
      {"from", {"forbidden-import", "imports not allowed"}},
      {"def", {"forbidden-definition", "function definitions not allowed"}},
      {"lambda", {"forbidden-definition", "function definitions not allowed"}},
      {"class", {"forbidden-definition", "class definitions not allowed"}},
      {"for", {"forbidden-loop", "loops not allowed"}},
      {"while", {"forbidden-loop", "loops not allowed"}},
      {"break", {"forbidden-loop", "loops not allowed"}},
      {"continue", {"forbidden-loop", "loops not allowed"}},
      {"if", {"forbidden-conditional", "conditionals not allowed"}},
      {"elif", {"forbidden-conditional", "conditionals not allowed"}},
      {"else", {"forbidden-conditional", "conditionals not allowed"}},
      {"and", {"forbidden-operator", "boolean operators not allowed"}},
      {"or", {"forbidden-operator", "boolean operators not allowed"}},
      {"not", {"forbidden-operator", "boolean operators not allowed"}},
      {"is", {"forbidden-operator", "comparison operators not allowed"}},
      {"in", {"forbidden-operator", "membership operators not allowed"}},
      {"try", {"forbidden-statement", "exception handling not allowed"}},
      {"except", {"forbidden-statement", "exception handling not allowed"}},
      {"finally", {"forbidden-statement", "exception handling not allowed"}},
      {"raise", {"forbidden-statement", "exception handling not allowed"}},
      {"with", {"forbidden-statement", "with statements not allowed"}},
      {"return", {"forbidden-statement", "return statements not allowed"}},
      {"yield", {"forbidden-statement", "yield not allowed"}},
      {"global", {"forbidden-statement", "global declarations not allowed"}},
      {"nonlocal", {"forbidden-statement", "nonlocal declarations not allowed"}},
      {"del", {"forbidden-statement", "del statements not allowed"}},
      {"assert", {"forbidden-statement", "assert statements not allowed"}},
      {"pass", {"forbidden-statement", "pass statements not allowed"}},
      {"async", {"forbidden-statement", "async code not allowed"}},
      {"await", {"forbidden-statement", "async code not allowed"}},
  };
  return table;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '\n') {
        if (depth_ == 0 && !out.empty() && out.back().kind != Tok::newline) out.push_back({Tok::newline, "", line_, col_});
        advance();
      } else if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
        advance();
        advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        advance();
      } else if (c == '"' || c == '\'') {
        out.push_back(string_token());
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        out.push_back(number_token());
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const int line = line_;
        const int col = col_;
        std::string text;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          text += src_[pos_];
          advance();
        }
        out.push_back({Tok::name, std::move(text), line, col});
      } else {
        out.push_back(punct_token());
      }
    }
    if (!out.empty() && out.back().kind != Tok::newline) out.push_back({Tok::newline, "", line_, col_});
    out.push_back({Tok::end, "", line_, col_});
    return out;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  Token string_token() {
    const int line = line_;
    const int col = col_;
    const char q = src_[pos_];
    const bool triple = src_.substr(pos_, 3) == std::string(3, q);
    for (int i = 0; i < (triple ? 3 : 1); ++i) advance();
    std::string value;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (triple ? src_.substr(pos_, 3) == std::string(3, q) : c == q) {
        for (int i = 0; i < (triple ? 3 : 1); ++i) advance();
        return {Tok::string, std::move(value), line, col};
      }
      if (c == '\n' && !triple) break;
      if (c == '\\' && pos_ + 1 < src_.size()) {
        advance();
        const char e = src_[pos_];
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case '\\': value += '\\'; break;
          case '\'': value += '\''; break;
          case '"': value += '"'; break;
          case '\n': break;
          default:
            value += '\\';
            value += e;
        }
        advance();
        continue;
      }
      value += c;
      advance();
    }
    return {Tok::bad, "unterminated string literal", line, col};
  }

  Token number_token() {
    const int line = line_;
    const int col = col_;
    std::string text;
    auto digits = [&] {
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        text += src_[pos_];
        advance();
      }
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      text += '.';
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        while (pos_ < look) {
          text += src_[pos_];
          advance();
        }
        digits();
      }
    }
    return {Tok::number, std::move(text), line, col};
  }

  Token punct_token() {
    const int line = line_;
    const int col = col_;
    const char c = src_[pos_];
    auto single = [&](Tok k) {
      advance();
      return Token{k, std::string(1, c), line, col};
    };
    switch (c) {
      case '(': ++depth_; return single(Tok::lparen);
      case '[': ++depth_; return single(Tok::lbrack);
      case '{': ++depth_; return single(Tok::op);
      case ')': depth_ = std::max(0, depth_ - 1); return single(Tok::rparen);
      case ']': depth_ = std::max(0, depth_ - 1); return single(Tok::rbrack);
      case '}': depth_ = std::max(0, depth_ - 1); return single(Tok::op);
      case ',': return single(Tok::comma);
      case '.': return single(Tok::dot);
      default: break;
    }
    static constexpr std::string_view kTwo[] = {"==", "!=", "<=", ">=", "**", "//", "+=", "-=", "*=", "/=", "->", ":="};
    for (auto op : kTwo) {
      if (src_.substr(pos_, 2) == op) {
        advance();
        advance();
        return {Tok::op, std::string(op), line, col};
      }
    }
    if (c == '=') return single(Tok::equals);
    if (std::string_view("+-*/%<>&|^~@:;!").find(c) != std::string_view::npos) return single(Tok::op);
    advance();
    // Swallow the rest of a multi-byte character so it is reported once.
    while (pos_ < src_.size() && (static_cast<unsigned char>(src_[pos_]) & 0xC0) == 0x80) advance();
    return {Tok::bad, "unexpected character", line, col};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
};

struct SyntaxError {
  Diagnostic diag;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program run(std::vector<Diagnostic>& diags) {
    Program program;
    while (peek().kind != Tok::end) {
      if (peek().kind == Tok::newline) {
        ++pos_;
        continue;
      }
      try {
        if (auto st = statement()) program.statements.push_back(std::move(*st));
      } catch (const SyntaxError& e) {
        diags.push_back(e.diag);
        while (peek().kind != Tok::newline && peek().kind != Tok::end) ++pos_;
      }
    }
    return program;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] static void fail(const Token& t, std::string code, std::string message) {
    Diagnostic d;
    d.code = std::move(code);
    d.message = std::move(message);
    d.line = t.line;
    d.column = t.column;
    d.token = t.kind == Tok::newline ? "<newline>" : t.kind == Tok::end ? "<end>" : t.text;
    throw SyntaxError{std::move(d)};
  }

  [[noreturn]] static void unexpected(const Token& t) {
    if (t.kind == Tok::bad) fail(t, "syntax", t.text);
    if (t.kind == Tok::newline || t.kind == Tok::end) fail(t, "syntax", "unexpected end of statement");
    fail(t, "syntax", "unexpected token '" + t.text + "'");
  }

  static void check_forbidden(const Token& t) {
    if (t.kind != Tok::name) return;
    const auto& table = forbidden_keywords();
    auto it = table.find(t.text);
    if (it != table.end()) fail(t, std::string(it->second.code), std::string(it->second.message));
  }

  void expect(Tok kind) {
    if (peek().kind != kind) unexpected(peek());
    ++pos_;
  }

  std::optional<Statement> statement() {
    const Token& first = peek();
    check_forbidden(first);
    Statement st;
    st.line = first.line;
    st.column = first.column;
    if (first.kind == Tok::name && peek(1).kind == Tok::equals) {
      st.target = first.text;
      pos_ += 2;
      const Token& value_tok = peek();
      Expr value = expr();
      end_of_statement();
      if (value.kind != Expr::Kind::call) fail(value_tok, "syntax", "assignment value must be a function call");
      st.call = std::move(value);
      return st;
    }
    if (first.kind == Tok::name && peek(1).kind == Tok::op && peek(1).text.size() == 2 && peek(1).text[1] == '=') {
      fail(peek(1), "forbidden-arithmetic", "arithmetic not allowed");
    }
    Expr value = expr();
    end_of_statement();
    if (value.kind == Expr::Kind::string) return std::nullopt;  // docstring
    if (value.kind != Expr::Kind::call || value.callee != "output_scenario" || !value.wrapper.empty()) {
      fail(first, "syntax", "only assignments and the final output_scenario call are allowed as statements");
    }
    st.call = std::move(value);
    return st;
  }

  void end_of_statement() {
    const Token& t = peek();
    if (t.kind == Tok::newline || t.kind == Tok::end) {
      if (t.kind == Tok::newline) ++pos_;
      return;
    }
    trailing_check(t);
    unexpected(t);
  }

  static void trailing_check(const Token& t) {
    if (t.kind == Tok::dot) fail(t, "forbidden-attribute", "attribute access not allowed");
    if (t.kind == Tok::lbrack) fail(t, "forbidden-subscript", "indexing not allowed");
    if (t.kind == Tok::op) {
      if (t.text == "{" || t.text == "}") fail(t, "forbidden-literal", "dict and set literals not allowed");
      if (t.text == ":") fail(t, "syntax", "unexpected ':'");
      static const std::set<std::string_view> cmp = {"==", "!=", "<", ">", "<=", ">="};
      if (cmp.count(t.text)) fail(t, "forbidden-operator", "comparison operators not allowed");
      fail(t, "forbidden-arithmetic", "arithmetic not allowed");
    }
    if (t.kind == Tok::name) check_forbidden(t);
  }

  Expr expr() {
    Expr e = primary();
    const Token& t = peek();
    if (t.kind == Tok::dot || t.kind == Tok::op || t.kind == Tok::lbrack) trailing_check(t);
    if (t.kind == Tok::name) {
      check_forbidden(t);
      unexpected(t);
    }
    return e;
  }

  Expr primary() {
    const Token& t = peek();
    Expr e;
    e.line = t.line;
    e.column = t.column;
    switch (t.kind) {
      case Tok::number:
        ++pos_;
        return number(e, t.text, false);
      case Tok::op:
        if ((t.text == "-" || t.text == "+") && peek(1).kind == Tok::number) {
          const bool neg = t.text == "-";
          pos_ += 1;
          const std::string text = next().text;
          return number(e, text, neg);
        }
        if (t.text == "{") fail(t, "forbidden-literal", "dict and set literals not allowed");
        fail(t, "forbidden-arithmetic", "arithmetic not allowed");
      case Tok::string:
        e.kind = Expr::Kind::string;
        while (peek().kind == Tok::string) e.text += next().text;
        return e;
      case Tok::lbrack: {
        ++pos_;
        e.kind = Expr::Kind::list;
        while (peek().kind != Tok::rbrack) {
          e.args.push_back(expr());
          if (peek().kind == Tok::comma) {
            ++pos_;
          } else if (peek().kind != Tok::rbrack) {
            if (peek().kind == Tok::name && peek().text == "for") {
              fail(peek(), "forbidden-loop", "loops not allowed");
            }
            unexpected(peek());
          }
        }
        ++pos_;
        return e;
      }
      case Tok::lparen: fail(t, "syntax", "parenthesized expressions and tuples not allowed");
      case Tok::name: break;
      default: unexpected(t);
    }
    check_forbidden(t);
    ++pos_;
    if (t.text == "True" || t.text == "False") {
      e.kind = Expr::Kind::boolean;
      e.boolean = t.text == "True";
      return e;
    }
    if (t.text == "None") {
      e.kind = Expr::Kind::none;
      return e;
    }
    if (peek().kind != Tok::lparen) {
      e.kind = Expr::Kind::identifier;
      e.text = t.text;
      return e;
    }
    e.kind = Expr::Kind::call;
    e.callee = t.text;
    arguments(e);
    if (peek().kind == Tok::lparen) {
      if (!is_wrapper(e.callee)) fail(peek(), "syntax", "calling the result of a call is not allowed");
      if (e.args.size() != 1 || !e.kwargs.empty() || e.args[0].kind != Expr::Kind::identifier) {
        fail(t, "syntax", e.callee + " takes exactly one function name, as in " + e.callee + "(fn)(args)");
      }
      Expr wrapped;
      wrapped.kind = Expr::Kind::call;
      wrapped.line = e.line;
      wrapped.column = e.column;
      wrapped.wrapper = e.callee;
      wrapped.callee = e.args[0].text;
      arguments(wrapped);
      if (peek().kind == Tok::lparen) fail(peek(), "syntax", "calling the result of a call is not allowed");
      return wrapped;
    }
    if (is_wrapper(e.callee)) {
      fail(t, "syntax", e.callee + " must be applied as " + e.callee + "(fn)(args)");
    }
    return e;
  }

  static Expr number(Expr e, const std::string& digits, bool negative) {
    std::string clean;
    for (char c : digits) {
      if (c != '_') clean += c;
    }
    e.kind = Expr::Kind::number;
    e.number = std::strtod(clean.c_str(), nullptr);
    if (negative) e.number = -e.number;
    e.text = (negative ? "-" : "") + clean;
    return e;
  }

  void arguments(Expr& call) {
    expect(Tok::lparen);
    while (peek().kind != Tok::rparen) {
      if (peek().kind == Tok::name && peek(1).kind == Tok::equals) {
        const Token& name = next();
        ++pos_;
        KeywordArg k;
        k.name = name.text;
        k.line = name.line;
        k.column = name.column;
        k.value = expr();
        call.kwargs.push_back(std::move(k));
      } else {
        if (peek().kind == Tok::op && (peek().text == "*" || peek().text == "**")) {
          fail(peek(), "syntax", "argument unpacking not allowed");
        }
        const Token& at = peek();
        Expr a = expr();
        if (!call.kwargs.empty()) fail(at, "syntax", "positional argument follows keyword argument");
        call.args.push_back(std::move(a));
      }
      if (peek().kind == Tok::comma) {
        ++pos_;
      } else if (peek().kind != Tok::rparen) {
        unexpected(peek());
      }
    }
    ++pos_;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

Diagnostic make(std::string code, std::string message, int line, int column, std::string token = {}) {
  Diagnostic d;
  d.code = std::move(code);
  d.message = std::move(message);
  d.line = line;
  d.column = column;
  d.token = std::move(token);
  return d;
}

void resolve(const Expr& e, const std::set<std::string, std::less<>>& bound, std::vector<Diagnostic>& diags) {
  switch (e.kind) {
    case Expr::Kind::identifier:
      if (!bound.count(e.text) && !is_prebound(e.text)) {
        diags.push_back(make("unbound-identifier", "name '" + e.text + "' is not defined", e.line, e.column, e.text));
      }
      return;
    case Expr::Kind::list:
      for (const auto& a : e.args) resolve(a, bound, diags);
      return;
    case Expr::Kind::call: break;
    default: return;
  }
  if (find_function(e.callee) == nullptr) {
    diags.push_back(make("unknown-function",
                         "unknown function '" + e.callee + "'; available: " + registry_names(), e.line, e.column,
                         e.callee));
  }
  for (const auto& a : e.args) resolve(a, bound, diags);
  for (const auto& k : e.kwargs) resolve(k.value, bound, diags);
}

}  // namespace

ParseResult parse_program(std::string_view source) {
  ParseResult result;
  auto tokens = Lexer(source).run();
  Program program = Parser(std::move(tokens)).run(result.diagnostics);

  std::set<std::string, std::less<>> bound;
  std::size_t outputs = 0;
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const auto& st = program.statements[i];
    resolve(st.call, bound, result.diagnostics);
    if (st.is_output()) {
      ++outputs;
      if (outputs > 1) {
        result.diagnostics.push_back(make("multiple-output", "output_scenario may appear only once", st.line, st.column));
      } else if (i + 1 != program.statements.size()) {
        result.diagnostics.push_back(
            make("output-not-last", "output_scenario must be the last statement", st.line, st.column));
      }
      continue;
    }
    if (is_prebound(st.target)) {
      result.diagnostics.push_back(
          make("rebind", "cannot assign to host-bound name '" + st.target + "'", st.line, st.column, st.target));
    } else if (find_function(st.target) != nullptr || is_wrapper(st.target)) {
      result.diagnostics.push_back(
          make("rebind", "cannot assign to function name '" + st.target + "'", st.line, st.column, st.target));
    }
    if (st.call.callee == "output_scenario") {
      result.diagnostics.push_back(
          make("syntax", "output_scenario returns nothing and cannot be assigned", st.line, st.column));
    }
    bound.insert(st.target);
  }
  if (outputs == 0) {
    const int line = program.statements.empty() ? 1 : program.statements.back().line;
    result.diagnostics.push_back(make("missing-output", "program must end with output_scenario(...)", line, 1));
  }
  std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(), [](const auto& a, const auto& b) {
    return std::pair(a.line, a.column) < std::pair(b.line, b.column);
  });
  if (!has_errors(result.diagnostics)) result.program = std::move(program);
  return result;
}

std::string extract_code_block(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::string(text);
  auto body = text.find('\n', open);
  if (body == std::string_view::npos) return {};
  ++body;
  auto close = text.find("```", body);
  if (close == std::string_view::npos) close = text.size();
  return std::string(text.substr(body, close - body));
}

}  // namespace refmine::dsl
