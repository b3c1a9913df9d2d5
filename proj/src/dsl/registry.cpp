#include "refmine/dsl/registry.hpp"

#include "refmine/dsl/parser.hpp"
#include "refmine/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace refmine::dsl {

const ParamSpec* FunctionSpec::param(std::string_view n) const {
  auto i = param_index(n);
  return i ? &params[*i] : nullptr;
}

std::optional<std::size_t> FunctionSpec::param_index(std::string_view n) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == n) return i;
  }
  return std::nullopt;
}

bool is_wrapper(std::string_view name) {
  return std::find(std::begin(kWrappers), std::end(kWrappers), name) != std::end(kWrappers);
}

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

ParamSpec req(std::string name, ParamKind kind, std::vector<std::string> choices = {}) {
  return {std::move(name), kind, true, std::monostate{}, std::move(choices)};
}

ParamSpec opt(std::string name, ParamKind kind, Literal fallback, std::vector<std::string> choices = {}) {
  return {std::move(name), kind, false, std::move(fallback), std::move(choices)};
}

const std::vector<std::string> kRelDirections = {"forward", "backward", "left", "right"};

struct Entry {
  FunctionSpec spec;
  std::string doc;
};

std::vector<Entry> build() {
  using K = ParamKind;
  const auto tc = req("track_candidates", K::scenario);
  const auto rc = req("related_candidates", K::scenario);
  const auto ld = req("log_dir", K::log_dir);
  std::vector<Entry> t;
  auto unary = [&](std::string name, std::vector<ParamSpec> extra, std::string doc, std::string first = "track_candidates") {
    FunctionSpec f{std::move(name), {req(std::move(first), K::scenario), ld}, false, true, false, false};
    for (auto& p : extra) f.params.push_back(std::move(p));
    t.push_back({std::move(f), std::move(doc)});
  };
  auto relational = [&](std::string name, std::vector<ParamSpec> extra, std::string doc,
                        std::string first = "track_candidates", std::string second = "related_candidates") {
    FunctionSpec f{std::move(name), {req(std::move(first), K::scenario), req(std::move(second), K::scenario), ld},
                   true, true, false, false};
    for (auto& p : extra) f.params.push_back(std::move(p));
    t.push_back({std::move(f), std::move(doc)});
  };

  t.push_back({{"get_objects_of_category", {ld, req("category", K::category)}, false, false, false, false},
                "All tracks of a category (ANY and VEHICLE expand to groups), over every observed timestamp."});
  unary("is_category", {req("category", K::category)}, "Candidates belonging to the category.");
  unary("has_velocity", {opt("min_velocity", K::number, 0.5), opt("max_velocity", K::number, kInfinity)},
        "Candidates whose speed in m/s lies within [min_velocity, max_velocity].");
  unary("stationary", {}, "Whole tracks whose centroid never moves 2 m or more from any earlier position.");
  unary("accelerating", {opt("min_accel", K::number, 0.65), opt("max_accel", K::number, kInfinity)},
        "Candidates with forward acceleration in m/s^2 inside the bounds; below -1 means braking.");
  unary("has_lateral_acceleration", {opt("min_accel", K::number, -kInfinity), opt("max_accel", K::number, kInfinity)},
        "Candidates with lateral acceleration inside the bounds; positive is leftward.");
  unary("turning", {opt("direction", K::optional_choice, std::monostate{}, {"left", "right"})},
        "Candidates turning left, right, or either way when direction is None.");
  unary("changing_lanes", {opt("direction", K::optional_choice, std::monostate{}, {"left", "right"})},
        "Candidates moving into a neighboring lane, optionally only toward one side.");
  relational("facing_toward", {opt("within_angle", K::number, 22.5), opt("max_distance", K::number, 50.0)},
             "Candidates whose heading points within within_angle degrees of a related object.");
  relational("heading_toward",
             {opt("angle_threshold", K::number, 22.5), opt("minimum_speed", K::number, 0.5),
              opt("max_distance", K::number, kInfinity)},
             "Candidates whose velocity points at a related object with enough closing speed.");
  relational("heading_in_relative_direction_to",
             {req("direction", K::choice, {"same", "opposite", "perpendicular"})},
             "Candidates moving in the same, opposite or perpendicular direction to a moving related object.");
  relational("has_objects_in_relative_direction",
             {req("direction", K::choice, kRelDirections), opt("min_number", K::count, 1.0),
              opt("max_number", K::count, kInfinity), opt("within_distance", K::number, 50.0),
              opt("lateral_thresh", K::number, kInfinity)},
             "Candidates with at least min_number related objects on the given side; links the nearest max_number.");
  relational("get_objects_in_relative_direction",
             {req("direction", K::choice, kRelDirections), opt("min_number", K::count, 0.0),
              opt("max_number", K::count, kInfinity), opt("within_distance", K::number, 50.0),
              opt("lateral_thresh", K::number, kInfinity)},
             "The related objects found on the given side of the candidates.");
  relational("being_crossed_by",
             {opt("direction", K::choice, std::string("forward"), kRelDirections),
              opt("in_direction", K::choice, std::string("either"), {"clockwise", "counterclockwise", "either"}),
              opt("forward_thresh", K::number, 10.0), opt("lateral_thresh", K::number, 5.0)},
             "Candidates whose half-midplane on the given side is crossed by a related object.");
  relational("near_objects",
             {opt("distance_thresh", K::number, 10.0), opt("min_objects", K::count, 1.0),
              opt("include_self", K::boolean, false)},
             "Candidates with at least min_objects related objects within distance_thresh meters.", "track_uuid",
             "candidate_uuids");
  relational("following", {}, "Candidates moving behind a related object in the same lane and direction.",
             "track_uuid", "candidate_uuids");
  unary("at_pedestrian_crossing", {opt("within_distance", K::number, 1.0)},
        "Candidates within within_distance meters of a pedestrian crossing (0 means inside).");
  unary("on_lane_type", {req("lane_type", K::choice, {"BUS", "VEHICLE", "BIKE"})},
        "Candidates on a lane of the given type.", "track_uuid");
  unary("near_intersection", {opt("threshold", K::number, 5.0)},
        "Candidates within threshold meters of an intersection.", "track_uuid");
  unary("on_intersection", {}, "Candidates on top of an intersection.");
  unary("at_stop_sign", {opt("forward_thresh", K::number, 10.0)},
        "Candidates in a stop-controlled lane, within 15 m of the sign and forward_thresh in front of it.");
  unary("in_drivable_area", {}, "Candidates inside the drivable area.");
  unary("on_road", {}, "Candidates on a road or bike lane (parking lots excluded).");
  relational("in_same_lane", {}, "Candidates sharing a lane with a related object.");
  relational("on_relative_side_of_road", {req("side", K::choice, {"same", "opposite"})},
             "Candidates on the same or opposite side of the road as a related object.");
  unary("is_color", {req("color", K::text)},
        "Candidates of a color (white, silver, black, red, yellow, blue); other values return every candidate.");
  t.push_back({{"scenario_and", {req("scenario_dicts", K::scenario_list)}, false, false, false, true},
               "Objects and timestamps present in every input."});
  t.push_back({{"scenario_or", {req("scenario_dicts", K::scenario_list)}, false, false, false, true},
               "Objects, timestamps and relationships present in any input."});
  t.push_back({{"output_scenario",
                {req("scenario", K::scenario), req("description", K::text), ld, req("output_dir", K::output_dir),
                 opt("visualize", K::boolean, false)},
                false, false, true, false},
               "Marks the final scenario; must be the last statement."});
  return t;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = build();
  return table;
}

}  // namespace

const std::vector<FunctionSpec>& registry() {
  static const std::vector<FunctionSpec> specs = [] {
    std::vector<FunctionSpec> out;
    for (const auto& e : entries()) out.push_back(e.spec);
    return out;
  }();
  return specs;
}

const FunctionSpec* find_function(std::string_view name) {
  const auto& r = registry();
  auto it = std::find_if(r.begin(), r.end(), [&](const FunctionSpec& f) { return f.name == name; });
  return it == r.end() ? nullptr : &*it;
}

std::string registry_names() {
  std::vector<std::string> names;
  for (const auto& f : registry()) names.push_back(f.name);
  names.emplace_back("scenario_not");
  names.emplace_back("reverse_relationship");
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

namespace {

Diagnostic diag_at(int line, int column, std::string code, std::string message, std::string token = {}) {
  Diagnostic d;
  d.code = std::move(code);
  d.message = std::move(message);
  d.line = line;
  d.column = column;
  d.token = std::move(token);
  return d;
}

Diagnostic diag_at(const Expr& e, std::string code, std::string message) {
  return diag_at(e.line, e.column, std::move(code), std::move(message), e.kind == Expr::Kind::call ? e.callee : e.text);
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

std::string param_names(const FunctionSpec& spec) {
  std::vector<std::string> names;
  for (const auto& p : spec.params) names.push_back(p.name);
  return join(names);
}

}  // namespace

std::optional<BoundArgs> bind_arguments(const FunctionSpec& spec, const Expr& call, std::vector<Diagnostic>& out) {
  BoundArgs bound;
  bound.values.assign(spec.params.size(), nullptr);
  bool ok = true;
  if (call.args.size() > spec.params.size()) {
    out.push_back(diag_at(call.args[spec.params.size()], "arity",
                          spec.name + " takes at most " + std::to_string(spec.params.size()) +
                              " arguments (" + param_names(spec) + "), got " + std::to_string(call.args.size())));
    ok = false;
  }
  for (std::size_t i = 0; i < call.args.size() && i < spec.params.size(); ++i) bound.values[i] = &call.args[i];
  for (const auto& k : call.kwargs) {
    auto idx = spec.param_index(k.name);
    if (!idx) {
      out.push_back(diag_at(k.line, k.column, "unknown-keyword",
                            spec.name + " has no parameter '" + k.name + "'; parameters: " + param_names(spec), k.name));
      ok = false;
      continue;
    }
    if (bound.values[*idx] != nullptr) {
      out.push_back(diag_at(k.line, k.column, "duplicate-argument",
                            spec.name + " got multiple values for '" + k.name + "'", k.name));
      ok = false;
      continue;
    }
    bound.values[*idx] = &k.value;
  }
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    if (bound.values[i] == nullptr && spec.params[i].required) {
      out.push_back(diag_at(call, "missing-argument", spec.name + " is missing required argument '" +
                                                          spec.params[i].name + "'"));
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return bound;
}

namespace {

class Validator {
 public:
  explicit Validator(std::vector<Diagnostic>& out) : out_(out) {}

  void call(const Expr& e) {
    const FunctionSpec* spec = find_function(e.callee);
    if (spec == nullptr) {
      out_.push_back(diag_at(e, "unknown-function",
                             "unknown function '" + e.callee + "'; available: " + registry_names()));
      return;
    }
    if (!e.wrapper.empty()) {
      if (spec->is_output || spec->is_combinator) {
        out_.push_back(diag_at(e, "bad-wrapper", e.wrapper + " cannot wrap " + spec->name));
        return;
      }
      if (e.wrapper == "scenario_not" && !spec->composable) {
        out_.push_back(diag_at(e, "bad-wrapper",
                               "scenario_not needs a function whose first argument is a scenario; " + spec->name +
                                   " is not"));
        return;
      }
      if (e.wrapper == "reverse_relationship" && !spec->relational) {
        out_.push_back(diag_at(e, "bad-wrapper",
                               "reverse_relationship needs a relational function; " + spec->name + " is not"));
        return;
      }
    }
    auto bound = bind_arguments(*spec, e, out_);
    if (!bound) return;
    for (std::size_t i = 0; i < spec->params.size(); ++i) {
      if (bound->values[i] != nullptr) argument(*spec, spec->params[i], *bound->values[i]);
    }
    ranges(*spec, e, *bound);
  }

 private:
  void type_error(const Expr& v, const FunctionSpec& spec, const ParamSpec& p, const std::string& want) {
    out_.push_back(diag_at(v, "type", spec.name + ": argument '" + p.name + "' must be " + want + ", got " +
                                          describe(v)));
  }

  static std::string describe(const Expr& v) {
    switch (v.kind) {
      case Expr::Kind::identifier: return "'" + v.text + "'";
      case Expr::Kind::string: return "string \"" + v.text + "\"";
      case Expr::Kind::number: return "number " + v.text;
      case Expr::Kind::boolean: return v.boolean ? "True" : "False";
      case Expr::Kind::none: return "None";
      case Expr::Kind::list: return "a list";
      case Expr::Kind::call: return "a call to " + v.callee;
    }
    return "?";
  }

  void scenario(const Expr& v, const FunctionSpec& spec, const ParamSpec& p) {
    if (v.kind == Expr::Kind::identifier && !is_prebound(v.text)) return;
    if (v.kind == Expr::Kind::call) {
      const FunctionSpec* inner = find_function(v.callee);
      if (inner != nullptr && inner->is_output) {
        type_error(v, spec, p, "a scenario");
        return;
      }
      call(v);
      return;
    }
    type_error(v, spec, p, "a scenario");
  }

  void argument(const FunctionSpec& spec, const ParamSpec& p, const Expr& v) {
    using K = ParamKind;
    switch (p.kind) {
      case K::scenario: scenario(v, spec, p); return;
      case K::scenario_list:
        if (v.kind != Expr::Kind::list) {
          type_error(v, spec, p, "a list of scenarios");
          return;
        }
        if (v.args.empty()) out_.push_back(diag_at(v, "empty-list", spec.name + " needs at least one scenario"));
        for (const auto& item : v.args) scenario(item, spec, p);
        return;
      case K::log_dir:
        if (v.kind != Expr::Kind::identifier || v.text != "log_dir") type_error(v, spec, p, "log_dir");
        return;
      case K::output_dir:
        if (v.kind != Expr::Kind::identifier || v.text != "output_dir") type_error(v, spec, p, "output_dir");
        return;
      case K::category:
        if (v.kind != Expr::Kind::string) {
          type_error(v, spec, p, "a category string");
        } else if (!is_valid_category_query(v.text)) {
          std::vector<std::string> names;
          for (auto n : category_names()) names.emplace_back(n);
          names.emplace_back("ANY");
          names.emplace_back("VEHICLE");
          out_.push_back(diag_at(v, "bad-enum", spec.name + ": unknown category \"" + v.text + "\"; valid: " +
                                                    join(names)));
        }
        return;
      case K::text:
        if (v.kind == Expr::Kind::string) return;
        if (v.kind == Expr::Kind::identifier && v.text == "description") return;
        type_error(v, spec, p, "a string");
        return;
      case K::optional_choice:
        if (v.kind == Expr::Kind::none) return;
        [[fallthrough]];
      case K::choice:
        if (v.kind != Expr::Kind::string) {
          type_error(v, spec, p, "one of " + join(p.choices) + (p.kind == K::optional_choice ? ", None" : ""));
        } else if (std::find(p.choices.begin(), p.choices.end(), v.text) == p.choices.end()) {
          out_.push_back(diag_at(v, "bad-enum", spec.name + ": '" + p.name + "' must be one of " + join(p.choices) +
                                                    (p.kind == K::optional_choice ? ", None" : "") + "; got \"" +
                                                    v.text + "\""));
        }
        return;
      case K::number:
        if (v.kind != Expr::Kind::number) type_error(v, spec, p, "a number");
        return;
      case K::count:
        if (v.kind != Expr::Kind::number) {
          type_error(v, spec, p, "a number");
        } else if (v.number < 0) {
          out_.push_back(diag_at(v, "bad-range", spec.name + ": '" + p.name + "' must be non-negative"));
        }
        return;
      case K::boolean:
        if (v.kind != Expr::Kind::boolean) type_error(v, spec, p, "True or False");
        return;
    }
  }

  static std::optional<double> literal_number(const FunctionSpec& spec, const BoundArgs& b, std::string_view name) {
    auto idx = spec.param_index(name);
    if (!idx) return std::nullopt;
    if (const Expr* v = b.values[*idx]) {
      if (v->kind == Expr::Kind::number) return v->number;
      return std::nullopt;
    }
    if (auto d = std::get_if<double>(&spec.params[*idx].fallback)) return *d;
    return std::nullopt;
  }

  void ranges(const FunctionSpec& spec, const Expr& e, const BoundArgs& b) {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        {"min_velocity", "max_velocity"}, {"min_accel", "max_accel"}, {"min_number", "max_number"}};
    for (const auto& [lo_name, hi_name] : pairs) {
      auto lo = literal_number(spec, b, lo_name);
      auto hi = literal_number(spec, b, hi_name);
      if (lo && hi && *lo > *hi) {
        out_.push_back(diag_at(e, "bad-range", spec.name + ": " + lo_name + " exceeds " + hi_name));
      }
    }
    for (const char* angle : {"within_angle", "angle_threshold"}) {
      auto a = literal_number(spec, b, angle);
      if (a && !(*a > 0.0 && *a <= 180.0)) {
        out_.push_back(diag_at(e, "bad-range", spec.name + ": " + angle + " must be in (0, 180] degrees"));
      }
    }
    for (const char* positive : {"distance_thresh", "forward_thresh"}) {
      auto a = literal_number(spec, b, positive);
      if (a && !(*a > 0.0)) out_.push_back(diag_at(e, "bad-range", spec.name + ": " + positive + " must be positive"));
    }
  }

  std::vector<Diagnostic>& out_;
};

}  // namespace

std::vector<Diagnostic> validate_program(const Program& program) {
  std::vector<Diagnostic> out;
  Validator v(out);
  for (const auto& st : program.statements) v.call(st.call);
  if (program.output() == nullptr) {
    out.push_back(diag_at(1, 1, "missing-output", "program must end with output_scenario(...)"));
  }
  return out;
}

namespace {

void collect_identifiers(const Expr& e, std::set<std::string, std::less<>>& used) {
  if (e.kind == Expr::Kind::identifier) used.insert(e.text);
  for (const auto& a : e.args) collect_identifiers(a, used);
  for (const auto& k : e.kwargs) collect_identifiers(k.value, used);
}

}  // namespace

std::vector<Diagnostic> lint_program(const Program& program) {
  std::vector<Diagnostic> out;
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const auto& st = program.statements[i];
    if (st.is_output()) continue;
    std::set<std::string, std::less<>> used;
    bool rebound = false;
    for (std::size_t j = i + 1; j < program.statements.size() && !rebound; ++j) {
      collect_identifiers(program.statements[j].call, used);
      rebound = program.statements[j].target == st.target;
    }
    if (!used.count(st.target)) {
      auto d = diag_at(st.line, st.column, "unused-binding", "'" + st.target + "' is assigned but never used",
                       st.target);
      d.severity = Severity::warning;
      out.push_back(std::move(d));
    }
  }
  return out;
}

namespace {

std::string render(const Literal& l) {
  if (std::holds_alternative<std::monostate>(l)) return "None";
  if (auto b = std::get_if<bool>(&l)) return *b ? "True" : "False";
  if (auto s = std::get_if<std::string>(&l)) return "\"" + *s + "\"";
  const double d = std::get<double>(l);
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << d;
  return os.str();
}

}  // namespace

std::string api_listing() {
  std::string out;
  for (const auto& e : entries()) {
    out += e.spec.name + "(";
    bool first = true;
    for (const auto& p : e.spec.params) {
      out += (first ? "" : ", ") + p.name;
      if (!p.choices.empty()) out += ": one of {" + join(p.choices) + "}";
      if (!p.required) out += "=" + render(p.fallback);
      first = false;
    }
    out += ")\n    " + e.doc + "\n";
  }
  out += "scenario_not(fn)(args)\n    Candidates (the first argument) minus what fn returns; relationships dropped.\n";
  out += "reverse_relationship(fn)(args)\n    Runs a relational fn and swaps referred and related objects.\n";
  return out;
}

}  // namespace refmine::dsl
