#include "refmine/dsl/interpreter.hpp"

#include "refmine/dsl/registry.hpp"

#include <functional>
#include <map>
#include <memory>
#include <unordered_map>

namespace refmine::dsl {

ExecutionError::ExecutionError(std::size_t statement, Diagnostic diag)
    : std::runtime_error("statement " + std::to_string(statement + 1) + ": " + diag.format()),
      statement_(statement),
      diag_(std::move(diag)) {}

namespace {

struct Value {
  enum class Kind { scenario, token, string, number, boolean, none, list };
  Kind kind = Kind::none;
  std::shared_ptr<const ScenarioSet> scenario;
  std::string text;
  double number = 0.0;
  bool boolean = false;
  std::vector<Value> items;
};

Value from_literal(const Literal& l) {
  Value v;
  if (auto b = std::get_if<bool>(&l)) {
    v.kind = Value::Kind::boolean;
    v.boolean = *b;
  } else if (auto d = std::get_if<double>(&l)) {
    v.kind = Value::Kind::number;
    v.number = *d;
  } else if (auto s = std::get_if<std::string>(&l)) {
    v.kind = Value::Kind::string;
    v.text = *s;
  }
  return v;
}

/// Runtime failure inside a call, promoted to ExecutionError by the statement loop.
struct CallFailure {
  std::string code;
  std::string message;
  const Expr* at;
};

class Args {
 public:
  explicit Args(std::vector<Value> values) : values_(std::move(values)) {}

  const ScenarioSet& scenario(std::size_t i) const { return *values_[i].scenario; }
  double number(std::size_t i) const { return values_[i].number; }
  bool flag(std::size_t i) const { return values_[i].boolean; }
  const std::string& text(std::size_t i) const { return values_[i].text; }
  bool is_none(std::size_t i) const { return values_[i].kind == Value::Kind::none; }
  std::vector<ScenarioSet> scenarios(std::size_t i) const {
    std::vector<ScenarioSet> out;
    for (const auto& item : values_[i].items) out.push_back(*item.scenario);
    return out;
  }

 private:
  std::vector<Value> values_;
};

template <typename T, typename F>
T parse_or_throw(const std::string& s, F parse, const char* what) {
  auto v = parse(s);
  if (!v) throw std::invalid_argument(std::string("invalid ") + what + " '" + s + "'");
  return *v;
}

Direction dir(const Args& a, std::size_t i) { return parse_or_throw<Direction>(a.text(i), parse_direction, "direction"); }

TurnDirection turn(const Args& a, std::size_t i) {
  if (a.is_none(i)) return TurnDirection::either;
  return parse_or_throw<TurnDirection>(a.text(i), parse_turn_direction, "direction");
}

using Impl = std::function<ScenarioSet(const PredicateBackend&, const Args&)>;

const std::unordered_map<std::string, Impl>& impls() {
  using B = const PredicateBackend&;
  using A = const Args&;
  static const std::unordered_map<std::string, Impl> table = {
      {"get_objects_of_category", [](B b, A a) { return b.get_objects_of_category(a.text(1)); }},
      {"is_category", [](B b, A a) { return b.is_category(a.scenario(0), a.text(2)); }},
      {"has_velocity", [](B b, A a) { return b.has_velocity(a.scenario(0), a.number(2), a.number(3)); }},
      {"stationary", [](B b, A a) { return b.stationary(a.scenario(0)); }},
      {"accelerating", [](B b, A a) { return b.accelerating(a.scenario(0), a.number(2), a.number(3)); }},
      {"has_lateral_acceleration",
       [](B b, A a) { return b.has_lateral_acceleration(a.scenario(0), a.number(2), a.number(3)); }},
      {"turning", [](B b, A a) { return b.turning(a.scenario(0), turn(a, 2)); }},
      {"changing_lanes", [](B b, A a) { return b.changing_lanes(a.scenario(0), turn(a, 2)); }},
      {"facing_toward",
       [](B b, A a) { return b.facing_toward(a.scenario(0), a.scenario(1), a.number(3), a.number(4)); }},
      {"heading_toward",
       [](B b, A a) {
         return b.heading_toward(a.scenario(0), a.scenario(1), a.number(3), a.number(4), a.number(5));
       }},
      {"heading_in_relative_direction_to",
       [](B b, A a) {
         return b.heading_in_relative_direction_to(
             a.scenario(0), a.scenario(1),
             parse_or_throw<RelativeHeading>(a.text(3), parse_relative_heading, "direction"));
       }},
      {"has_objects_in_relative_direction",
       [](B b, A a) {
         return b.has_objects_in_relative_direction(a.scenario(0), a.scenario(1), dir(a, 3), a.number(4), a.number(5),
                                                    a.number(6), a.number(7));
       }},
      {"get_objects_in_relative_direction",
       [](B b, A a) {
         return b.get_objects_in_relative_direction(a.scenario(0), a.scenario(1), dir(a, 3), a.number(4), a.number(5),
                                                    a.number(6), a.number(7));
       }},
      {"being_crossed_by",
       [](B b, A a) {
         return b.being_crossed_by(a.scenario(0), a.scenario(1), dir(a, 3),
                                   parse_or_throw<CrossingSense>(a.text(4), parse_crossing_sense, "in_direction"),
                                   a.number(5), a.number(6));
       }},
      {"near_objects",
       [](B b, A a) { return b.near_objects(a.scenario(0), a.scenario(1), a.number(3), a.number(4), a.flag(5)); }},
      {"following", [](B b, A a) { return b.following(a.scenario(0), a.scenario(1)); }},
      {"at_pedestrian_crossing", [](B b, A a) { return b.at_pedestrian_crossing(a.scenario(0), a.number(2)); }},
      {"on_lane_type",
       [](B b, A a) {
         return b.on_lane_type(a.scenario(0), parse_or_throw<LaneType>(a.text(2), parse_lane_type, "lane_type"));
       }},
      {"near_intersection", [](B b, A a) { return b.near_intersection(a.scenario(0), a.number(2)); }},
      {"on_intersection", [](B b, A a) { return b.on_intersection(a.scenario(0)); }},
      {"at_stop_sign", [](B b, A a) { return b.at_stop_sign(a.scenario(0), a.number(2)); }},
      {"in_drivable_area", [](B b, A a) { return b.in_drivable_area(a.scenario(0)); }},
      {"on_road", [](B b, A a) { return b.on_road(a.scenario(0)); }},
      {"in_same_lane", [](B b, A a) { return b.in_same_lane(a.scenario(0), a.scenario(1)); }},
      {"on_relative_side_of_road",
       [](B b, A a) {
         return b.on_relative_side_of_road(a.scenario(0), a.scenario(1),
                                           parse_or_throw<RoadSide>(a.text(3), parse_road_side, "side"));
       }},
      {"is_color", [](B b, A a) { return b.is_color(a.scenario(0), a.text(2)); }},
      {"scenario_and",
       [](B, A a) {
         auto inputs = a.scenarios(0);
         return scenario_and(inputs);
       }},
      {"scenario_or",
       [](B, A a) {
         auto inputs = a.scenarios(0);
         return scenario_or(inputs);
       }},
  };
  return table;
}

class Machine {
 public:
  Machine(const PredicateBackend& backend, const ExecOptions& options) : backend_(backend), options_(options) {}

  ExecutionResult run(const Program& program) {
    ExecutionResult result;
    for (std::size_t i = 0; i < program.statements.size(); ++i) {
      const auto& st = program.statements[i];
      try {
        if (st.is_output()) {
          output(st.call, result);
          return result;
        }
        env_[st.target] = eval(st.call);
      } catch (const CallFailure& f) {
        Diagnostic d;
        d.code = f.code;
        d.message = f.message;
        d.line = f.at ? f.at->line : st.line;
        d.column = f.at ? f.at->column : st.column;
        d.token = f.at ? (f.at->kind == Expr::Kind::call ? f.at->callee : f.at->text) : "";
        throw ExecutionError(i, std::move(d));
      }
    }
    Diagnostic d;
    d.code = "missing-output";
    d.message = "program ended without output_scenario";
    throw ExecutionError(program.statements.size(), std::move(d));
  }

 private:
  void output(const Expr& call, ExecutionResult& result) {
    const FunctionSpec* spec = find_function("output_scenario");
    const Value scenario = bound_value(*spec, call, 0);
    const Value text = bound_value(*spec, call, 1);
    if (scenario.kind != Value::Kind::scenario) throw CallFailure{"type", "output_scenario needs a scenario", &call};
    result.scenario = *scenario.scenario;
    result.description = text.text;
  }

  Value bound_value(const FunctionSpec& spec, const Expr& call, std::size_t index) {
    std::vector<Diagnostic> diags;
    auto bound = bind_arguments(spec, call, diags);
    if (!bound) throw CallFailure{diags.front().code, diags.front().message, &call};
    const Expr* e = bound->values[index];
    return e ? eval(*e) : from_literal(spec.params[index].fallback);
  }

  Value eval(const Expr& e) {
    Value v;
    switch (e.kind) {
      case Expr::Kind::identifier: {
        if (e.text == "log_dir" || e.text == "output_dir") {
          v.kind = Value::Kind::token;
          v.text = e.text;
          return v;
        }
        if (e.text == "description") {
          v.kind = Value::Kind::string;
          v.text = options_.description;
          return v;
        }
        auto it = env_.find(e.text);
        if (it == env_.end()) throw CallFailure{"unbound-identifier", "name '" + e.text + "' is not defined", &e};
        return it->second;
      }
      case Expr::Kind::string:
        v.kind = Value::Kind::string;
        v.text = e.text;
        return v;
      case Expr::Kind::number:
        v.kind = Value::Kind::number;
        v.number = e.number;
        return v;
      case Expr::Kind::boolean:
        v.kind = Value::Kind::boolean;
        v.boolean = e.boolean;
        return v;
      case Expr::Kind::none: return v;
      case Expr::Kind::list:
        v.kind = Value::Kind::list;
        for (const auto& item : e.args) v.items.push_back(eval(item));
        return v;
      case Expr::Kind::call: return call(e);
    }
    return v;
  }

  Value call(const Expr& e) {
    const FunctionSpec* spec = find_function(e.callee);
    if (spec == nullptr || spec->is_output) {
      throw CallFailure{"unknown-function", "cannot call '" + e.callee + "' here", &e};
    }
    std::vector<Diagnostic> diags;
    auto bound = bind_arguments(*spec, e, diags);
    if (!bound) throw CallFailure{diags.front().code, diags.front().message, &e};
    std::vector<Value> values;
    values.reserve(spec->params.size());
    for (std::size_t i = 0; i < spec->params.size(); ++i) {
      const Expr* a = bound->values[i];
      Value v = a ? eval(*a) : from_literal(spec->params[i].fallback);
      check_kind(*spec, spec->params[i], v, a ? a : &e);
      values.push_back(std::move(v));
    }
    Args args(std::move(values));
    const auto start = std::chrono::steady_clock::now();
    ScenarioSet out;
    try {
      out = impls().at(spec->name)(backend_, args);
      if (e.wrapper == "scenario_not") {
        out = scenario_not(args.scenario(0), out);
      } else if (e.wrapper == "reverse_relationship") {
        out = reverse_relationship(out);
      }
    } catch (const std::exception& ex) {
      throw CallFailure{"runtime", std::string(e.wrapper.empty() ? "" : e.wrapper + "(") + spec->name +
                                       (e.wrapper.empty() ? "" : ")") + ": " + ex.what(),
                        &e};
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (elapsed > options_.call_timeout) {
      throw CallFailure{"timeout",
                        spec->name + " exceeded the " + std::to_string(options_.call_timeout.count()) +
                            " ms call budget",
                        &e};
    }
    const std::size_t pairs = out.pair_count() + out.relationship_count();
    if (pairs > options_.pair_budget) {
      throw CallFailure{"pair-budget",
                        spec->name + " produced " + std::to_string(pairs) + " pairs, over the budget of " +
                            std::to_string(options_.pair_budget),
                        &e};
    }
    Value v;
    v.kind = Value::Kind::scenario;
    v.scenario = std::make_shared<const ScenarioSet>(std::move(out));
    return v;
  }

  static void check_kind(const FunctionSpec& spec, const ParamSpec& p, const Value& v, const Expr* at) {
    using K = ParamKind;
    bool ok = true;
    switch (p.kind) {
      case K::scenario: ok = v.kind == Value::Kind::scenario; break;
      case K::scenario_list:
        ok = v.kind == Value::Kind::list;
        for (const auto& item : v.items) ok = ok && item.kind == Value::Kind::scenario;
        break;
      case K::log_dir:
      case K::output_dir: ok = v.kind == Value::Kind::token; break;
      case K::category:
      case K::text:
      case K::choice: ok = v.kind == Value::Kind::string; break;
      case K::optional_choice: ok = v.kind == Value::Kind::string || v.kind == Value::Kind::none; break;
      case K::number:
      case K::count: ok = v.kind == Value::Kind::number; break;
      case K::boolean: ok = v.kind == Value::Kind::boolean; break;
    }
    if (!ok) throw CallFailure{"type", spec.name + ": argument '" + p.name + "' has the wrong type", at};
  }

  const PredicateBackend& backend_;
  const ExecOptions& options_;
  std::map<std::string, Value, std::less<>> env_;
};

}  // namespace

ExecutionResult execute_program(const Program& program, const PredicateBackend& backend, const ExecOptions& options) {
  return Machine(backend, options).run(program);
}

}  // namespace refmine::dsl
