#include "cli.hpp"

#include "refmine/dsl/parser.hpp"
#include "refmine/dsl/registry.hpp"
#include "refmine/metrics.hpp"
#include "refmine/mining.hpp"
#include "refmine/synthesis.hpp"
#include "refmine/synthgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace refmine::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

/// I/O or usage problem that ends the command with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw UsageError("cannot write " + p.string());
}

void set_jobs(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

std::string description_of(const fs::path& file, const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  const std::string tag = "# Description:";
  while (std::getline(lines, line)) {
    if (line.rfind(tag, 0) == 0) {
      const auto b = line.find_first_not_of(' ', tag.size());
      if (b != std::string::npos) {
        auto d = line.substr(b);
        while (!d.empty() && (d.back() == '\r' || d.back() == ' ')) d.pop_back();
        return d;
      }
    }
  }
  return file.stem().string();
}

std::vector<fs::path> program_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".py") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw UsageError("program path not found: " + in);
    }
  }
  return out;
}

std::vector<std::string> read_prompts(const fs::path& file) {
  const std::string text = read_file(file);
  std::vector<std::string> out;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_array()) throw UsageError("prompts JSON must be an array of strings");
    for (const auto& v : doc) {
      if (!v.is_string()) throw UsageError("prompts JSON must be an array of strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  } catch (const nlohmann::json::parse_error&) {
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

std::vector<fs::path> log_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw UsageError("logs directory not found: " + root.string());
  if (fs::exists(root / "tracks.csv")) return {root};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "tracks.csv")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw UsageError("no logs (directories with tracks.csv) under " + root.string());
  return out;
}

LogBundle load_log(const fs::path& dir) {
  try {
    return load_log_bundle(dir);
  } catch (const std::exception& e) {
    throw UsageError("cannot load log " + dir.string() + ": " + e.what());
  }
}

template <typename T, typename F>
T load_config(const std::string& path, F loader) {
  if (path.empty()) return T{};
  try {
    return loader(path);
  } catch (const std::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

synthesis::SynthesisConfig synth_config(const std::string& path) {
  return load_config<synthesis::SynthesisConfig>(path, [](const std::string& p) {
    return synthesis::SynthesisConfig::load(p);
  });
}

std::unique_ptr<synthesis::LlmClient> make_client(const std::string& mock_file) {
  if (mock_file.empty()) return std::make_unique<synthesis::HttpLlmClient>();
  std::vector<std::string> replies;
  try {
    const auto doc = nlohmann::json::parse(read_file(mock_file));
    for (const auto& r : doc) replies.push_back(r.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("mock replies " + mock_file + ": " + e.what());
  }
  if (replies.empty()) throw UsageError("mock replies file is empty");
  return std::make_unique<synthesis::ScriptedClient>(std::move(replies));
}

std::string program_file_text(const std::string& description, const std::string& source) {
  std::string text = "# Description: " + description + "\n\n" + source;
  if (!text.empty() && text.back() != '\n') text += '\n';
  return text;
}

ordered_json attempts_json(const std::vector<synthesis::Attempt>& attempts) {
  ordered_json arr = ordered_json::array();
  for (const auto& a : attempts) {
    ordered_json o;
    o["reply"] = a.reply;
    o["diagnostics"] = ordered_json::array();
    for (const auto& d : a.diagnostics) o["diagnostics"].push_back(ordered_json::parse(d.to_json().dump()));
    arr.push_back(o);
  }
  return arr;
}

// ---------------------------------------------------------------- mine

struct MineArgs {
  std::string logs, out, prompts, engine_config, post_config, synth_config, mock, examples;
  std::vector<std::string> programs;
  bool synthesize = false, dry_run = false;
  int jobs = 0;
};

struct Entry {
  std::string description;
  std::string source_file;
  std::string status = "ok";  // ok, parse-fail, exec-fail, synth-fail
  std::vector<std::string> diagnostics;
  std::optional<dsl::Program> program;
  std::string code;
};

int cmd_mine(const MineArgs& a, std::ostream& out, std::ostream& err) {
  set_jobs(a.jobs);
  if (a.programs.empty() && a.prompts.empty()) throw UsageError("mine needs --programs or --prompts");
  if (!a.prompts.empty() && !a.synthesize) throw UsageError("--prompts requires --synthesize");
  const auto logs = log_dirs(a.logs);

  MiningOptions options;
  options.constants = load_config<EngineConstants>(a.engine_config, [](const std::string& p) {
    return EngineConstants::load(p);
  });
  options.post = load_config<PostprocessConfig>(a.post_config, [](const std::string& p) {
    return PostprocessConfig::load(p);
  });

  std::vector<Entry> entries;
  for (const auto& f : program_files(a.programs)) {
    Entry e;
    e.code = read_file(f);
    e.description = description_of(f, e.code);
    e.source_file = f.generic_string();
    auto parsed = dsl::parse_program(e.code);
    std::vector<dsl::Diagnostic> diags = parsed.diagnostics;
    if (parsed.ok()) {
      auto v = dsl::validate_program(*parsed.program);
      diags.insert(diags.end(), v.begin(), v.end());
    }
    for (const auto& d : diags) e.diagnostics.push_back(d.format());
    if (parsed.ok() && !dsl::has_errors(diags)) {
      e.program = std::move(parsed.program);
    } else {
      e.status = "parse-fail";
    }
    entries.push_back(std::move(e));
  }
  if (!a.prompts.empty()) {
    const auto prompts = read_prompts(a.prompts);
    const auto cfg = synth_config(a.synth_config);
    auto client = make_client(a.mock);
    const auto examples = a.examples.empty() ? synthesis::default_examples() : synthesis::load_examples(a.examples);
    for (auto& o : synthesis::synthesize_suite(prompts, *client, cfg, examples)) {
      Entry e;
      e.description = o.description;
      e.source_file = "synthesized";
      if (o.ok()) {
        e.program = std::move(o.result->program);
        e.code = o.result->source;
      } else {
        e.status = "synth-fail";
        for (const auto& d : o.attempts.back().diagnostics) e.diagnostics.push_back(d.format());
      }
      entries.push_back(std::move(e));
    }
  }
  {
    std::set<std::string> seen;
    for (const auto& e : entries) {
      if (!seen.insert(e.description).second) throw UsageError("duplicate description: " + e.description);
    }
  }

  bool failed = false;
  for (const auto& e : entries) {
    if (e.status != "ok") {
      failed = true;
      err << e.source_file << ": " << e.status << "\n";
      for (const auto& d : e.diagnostics) err << "  " << d << "\n";
    }
  }
  if (a.dry_run) {
    for (const auto& e : entries) out << e.status << "\t" << e.description << "\n";
    return failed ? kValidation : kOk;
  }
  if (a.out.empty()) throw UsageError("mine needs --out");

  std::vector<LogBundle> bundles;
  for (const auto& d : logs) bundles.push_back(load_log(d));
  std::vector<const LogBundle*> ptrs;
  for (const auto& b : bundles) ptrs.push_back(&b);
  std::vector<MiningJob> jobs;
  std::vector<std::size_t> job_entry;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].program) continue;
    jobs.push_back({entries[i].description, &*entries[i].program});
    job_entry.push_back(i);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = mine_all(jobs, ptrs, options);
  const double total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path out_root(a.out);
  fs::create_directories(out_root);
  std::vector<ordered_json> per_entry(entries.size(), ordered_json::object());
  for (std::size_t l = 0; l < bundles.size(); ++l) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& r = results[l * jobs.size() + j];
      Entry& e = entries[job_entry[j]];
      ordered_json lj;
      if (r.scenario) {
        write_scenario_output(*r.scenario, r.description, r.log_id, out_root / r.log_id);
        lj["status"] = "ok";
        lj["referred_pairs"] = r.scenario->pair_count();
        lj["relationships"] = r.scenario->relationship_count();
      } else {
        failed = true;
        e.status = "exec-fail";
        lj["status"] = "exec-fail";
        lj["error"] = r.error;
        err << "exec-fail " << r.log_id << " '" << r.description << "': " << r.error << "\n";
      }
      err << "event=mine log=" << r.log_id << " prompt=" << description_hash(r.description)
          << " status=" << (r.scenario ? "ok" : "exec-fail") << " seconds=" << std::fixed << std::setprecision(4)
          << r.seconds << std::defaultfloat << "\n";
      per_entry[job_entry[j]][r.log_id] = lj;
    }
  }
  err << "event=mine_done logs=" << bundles.size() << " programs=" << jobs.size() << " seconds=" << std::fixed
      << std::setprecision(3) << total_s << std::defaultfloat << "\n";

  ordered_json manifest;
  manifest["programs"] = a.programs;
  manifest["prompts_file"] = a.prompts;
  manifest["logs_root"] = a.logs;
  manifest["output_root"] = a.out;
  manifest["configs"] = {{"engine", a.engine_config}, {"postprocess", a.post_config}, {"synthesis", a.synth_config}};
  auto& arr = manifest["entries"] = ordered_json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    ordered_json o;
    o["description"] = e.description;
    o["hash"] = description_hash(e.description);
    o["source"] = e.source_file;
    o["status"] = e.status;
    o["diagnostics"] = e.diagnostics;
    o["logs"] = per_entry[i];
    arr.push_back(o);
  }
  write_file(out_root / "manifest.json", manifest.dump(2) + "\n");
  out << "mined " << jobs.size() << " program(s) on " << bundles.size() << " log(s) into " << a.out << "\n";
  return failed ? kValidation : kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred, gt, logs, config, post_config, out;
  bool related = false;
  int jobs = 0;
};

/// log_id -> scenario file names under a result root.
std::map<std::string, std::set<std::string>> scan_results(const fs::path& root) {
  if (!fs::is_directory(root)) throw UsageError("results directory not found: " + root.string());
  std::map<std::string, std::set<std::string>> out;
  for (const auto& d : fs::directory_iterator(root)) {
    if (!d.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(d.path())) {
      const auto name = f.path().filename().string();
      if (f.is_regular_file() && name.rfind("scenario_", 0) == 0 && f.path().extension() == ".json") {
        out[d.path().filename().string()].insert(name);
      }
    }
  }
  return out;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  set_jobs(a.jobs);
  auto config = load_config<EvalConfig>(a.config, [](const std::string& p) { return EvalConfig::load(p); });
  if (a.related) config.score_related = true;
  const auto post = load_config<PostprocessConfig>(a.post_config, [](const std::string& p) {
    return PostprocessConfig::load(p);
  });
  const auto pred = scan_results(a.pred);
  const auto gt = scan_results(a.gt);
  std::vector<std::string> orphans;
  for (const auto& [log, files] : gt) {
    for (const auto& f : files) {
      auto it = pred.find(log);
      if (it == pred.end() || !it->second.count(f)) orphans.push_back("gt only: " + log + "/" + f);
    }
  }
  for (const auto& [log, files] : pred) {
    for (const auto& f : files) {
      auto it = gt.find(log);
      if (it == gt.end() || !it->second.count(f)) orphans.push_back("pred only: " + log + "/" + f);
    }
  }
  if (!orphans.empty()) {
    err << "pairing mismatch between " << a.pred << " and " << a.gt << ":\n";
    for (const auto& o : orphans) err << "  " << o << "\n";
    return kUsage;
  }
  if (gt.empty()) throw UsageError("no scenario files under " + a.gt);

  struct LogTracks {
    std::vector<Track> gt_tracks, pred_tracks;
    std::vector<Timestamp> grid;
  };
  std::map<std::string, LogTracks> tracks;
  for (const auto& [log, files] : gt) {
    const LogBundle b = load_log(fs::path(a.logs) / log);
    LogTracks lt;
    lt.grid = output_grid(b.timestamps(), config.output_rate_hz);
    lt.pred_tracks = filter_top_k(b.tracks, post);
    lt.gt_tracks = b.tracks;
    tracks.emplace(log, std::move(lt));
  }
  std::vector<EvalCase> cases;
  for (const auto& [log, files] : gt) {
    for (const auto& f : files) {
      ScenarioFile g, p;
      try {
        g = read_scenario_json(fs::path(a.gt) / log / f);
        p = read_scenario_json(fs::path(a.pred) / log / f);
      } catch (const std::exception& e) {
        throw UsageError(log + "/" + f + ": " + e.what());
      }
      if (g.description != p.description) {
        throw UsageError(log + "/" + f + ": descriptions differ ('" + g.description + "' vs '" + p.description + "')");
      }
      EvalCase c;
      c.prompt = g.description;
      c.log_id = log;
      c.gt = std::move(g.scenario);
      c.pred = std::move(p.scenario);
      const auto& lt = tracks.at(log);
      c.pred_tracks = &lt.pred_tracks;
      c.gt_tracks = &lt.gt_tracks;
      c.timestamps = lt.grid;
      cases.push_back(std::move(c));
    }
  }
  EvalReport report;
  try {
    report = evaluate(cases, config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("evaluation: ") + e.what());
  }
  out << report.to_text();
  if (!a.out.empty()) write_file(a.out, report.to_json());
  return kOk;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::vector<std::string> scripts, fixtures;
  int random = 0;
  std::uint64_t seed = 0;
  std::string out, post_config, engine_config;
  int jobs = 0;
};

synth::SceneScript fixture_by_name(const std::string& name) {
  if (name == "S1") return synth::fixture_s1();
  if (name == "S1_lane_change") return synth::fixture_s1_lane_change();
  if (name == "S2") return synth::fixture_s2();
  if (name == "bike_group") return synth::fixture_bike_group();
  throw UsageError("unknown fixture '" + name + "' (S1, S1_lane_change, S2, bike_group)");
}

int cmd_gen(const GenArgs& a, std::ostream& out, std::ostream& err) {
  set_jobs(a.jobs);
  std::vector<synth::SceneScript> scripts;
  for (const auto& s : a.scripts) {
    try {
      scripts.push_back(synth::SceneScript::load(s));
    } catch (const std::exception& e) {
      throw UsageError("script " + s + ": " + e.what());
    }
  }
  for (const auto& f : a.fixtures) scripts.push_back(fixture_by_name(f));
  if (a.random < 0) throw UsageError("--random must be >= 0");
  for (int i = 0; i < a.random; ++i) scripts.push_back(synth::random_script(a.seed + static_cast<std::uint64_t>(i)));
  if (scripts.empty()) throw UsageError("gen needs --script, --fixture or --random");
  {
    std::set<std::string> ids;
    for (const auto& s : scripts) {
      if (!ids.insert(s.log_id).second) throw UsageError("duplicate log id " + s.log_id);
    }
  }
  MiningOptions options;
  options.constants = load_config<EngineConstants>(a.engine_config, [](const std::string& p) {
    return EngineConstants::load(p);
  });
  options.post = load_config<PostprocessConfig>(a.post_config, [](const std::string& p) {
    return PostprocessConfig::load(p);
  });

  const fs::path root(a.out);
  std::vector<std::string> errors(scripts.size());
  const long n = static_cast<long>(scripts.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& s = scripts[static_cast<std::size_t>(i)];
    try {
      const auto scene = synth::generate_scene(s);
      synth::write_scene(root / "logs" / s.log_id, scene);
      write_file(root / "scripts" / (s.log_id + ".json"), s.to_json().dump(2) + "\n");
      for (const auto& q : s.queries) {
        const auto parsed = dsl::parse_program(q.source);
        const auto gt = reference_mine(*parsed.program, q.description, scene.bundle, options);
        write_scenario_output(gt, q.description, s.log_id, root / "gt" / s.log_id);
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = s.log_id + ": " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw UsageError(e);
  }
  std::map<std::string, const synth::LabeledQuery*> queries;
  std::vector<std::string> prompts;
  for (const auto& s : scripts) {
    for (const auto& q : s.queries) {
      auto [it, fresh] = queries.emplace(q.id, &q);
      if (!fresh && (it->second->source != q.source || it->second->description != q.description)) {
        throw UsageError("query id " + q.id + " has two different definitions");
      }
      if (fresh) prompts.push_back(q.description);
    }
  }
  for (const auto& [id, q] : queries) {
    write_file(root / "programs" / (id + ".py"), program_file_text(q->description, q->source));
  }
  write_file(root / "prompts.json", ordered_json(prompts).dump(2) + "\n");
  err << "event=gen scenes=" << scripts.size() << " queries=" << queries.size() << "\n";
  out << "generated " << scripts.size() << " scene(s) into " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::vector<std::string>& files, std::ostream& out) {
  bool ok = true;
  for (const auto& f : files) {
    const std::string text = read_file(f);
    auto parsed = dsl::parse_program(text);
    std::vector<dsl::Diagnostic> diags = parsed.diagnostics;
    if (parsed.ok()) {
      auto v = dsl::validate_program(*parsed.program);
      diags.insert(diags.end(), v.begin(), v.end());
      auto l = dsl::lint_program(*parsed.program);
      diags.insert(diags.end(), l.begin(), l.end());
    }
    const bool valid = parsed.ok() && !dsl::has_errors(diags);
    ok = ok && valid;
    out << f << ": " << (valid ? "ok" : "invalid") << "\n";
    for (const auto& d : diags) out << "  " << d.format() << "\n";
  }
  return ok ? kOk : kValidation;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string prompts, out, config, mock, examples;
  int jobs = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  set_jobs(a.jobs);
  const auto prompts = read_prompts(a.prompts);
  const auto cfg = synth_config(a.config);
  auto client = make_client(a.mock);
  const auto examples = a.examples.empty() ? synthesis::default_examples() : synthesis::load_examples(a.examples);
  const auto outcomes = synthesis::synthesize_suite(prompts, *client, cfg, examples);
  const auto stats = synthesis::failure_stats(outcomes);
  const fs::path root(a.out);
  ordered_json doc;
  auto& arr = doc["prompts"] = ordered_json::array();
  for (const auto& o : outcomes) {
    ordered_json j;
    j["description"] = o.description;
    j["hash"] = description_hash(o.description);
    j["status"] = o.ok() ? "ok" : "synth-fail";
    j["attempts"] = attempts_json(o.attempts);
    if (o.ok()) {
      const fs::path file = root / "programs" / (description_hash(o.description) + ".py");
      write_file(file, program_file_text(o.description, o.result->source));
      j["program"] = file.filename().string();
    }
    arr.push_back(j);
    err << "event=synth prompt=" << description_hash(o.description) << " status=" << (o.ok() ? "ok" : "synth-fail")
        << " attempts=" << o.attempts.size() << "\n";
  }
  doc["total"] = stats.total;
  doc["failures"] = stats.failures;
  doc["failure_rate"] = stats.rate();
  write_file(root / "synthesis.json", doc.dump(2) + "\n");
  out << "synthesized " << (stats.total - stats.failures) << "/" << stats.total << " program(s); failure rate "
      << stats.rate() << "\n";
  return stats.failures == 0 ? kOk : kValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-temporal scenario mining over tracked driving logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "refmine 0.1.0");

  MineArgs mine;
  auto* m = app.add_subcommand("mine", "Run programs (or synthesized prompts) over logs");
  m->add_option("--logs", mine.logs, "Log directory, or a root of log directories")->required();
  m->add_option("--programs", mine.programs, "Program files or directories of *.py");
  m->add_option("--prompts", mine.prompts, "Prompt file (JSON array or one per line); needs --synthesize");
  m->add_flag("--synthesize", mine.synthesize, "Synthesize programs for --prompts first");
  m->add_option("--out", mine.out, "Output root");
  m->add_option("--engine-config", mine.engine_config, "Engine constants file");
  m->add_option("--post-config", mine.post_config, "Postprocess config file");
  m->add_option("--synth-config", mine.synth_config, "Synthesis config file");
  m->add_option("--mock-replies", mine.mock, "JSON array of canned model replies (offline)");
  m->add_option("--examples", mine.examples, "Directory of example programs for the prompt");
  m->add_flag("--dry-run", mine.dry_run, "Parse and validate only");
  m->add_option("--jobs", mine.jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predictions against ground truth");
  e->add_option("--pred", ev.pred, "Prediction root (<log_id>/scenario_*.json)")->required();
  e->add_option("--gt", ev.gt, "Ground-truth root")->required();
  e->add_option("--logs", ev.logs, "Log root holding the tracks")->required();
  e->add_option("--config", ev.config, "Eval config file");
  e->add_option("--post-config", ev.post_config, "Postprocess config (top-K for predicted tracks)");
  e->add_option("--out", ev.out, "Write the report as JSON here");
  e->add_flag("--related", ev.related, "Also score related objects");
  e->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::NonNegativeNumber);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate synthetic logs with ground truth");
  g->add_option("--script", gen.scripts, "Scene script JSON file(s)");
  g->add_option("--fixture", gen.fixtures, "Built-in fixture: S1, S1_lane_change, S2, bike_group");
  g->add_option("--random", gen.random, "Number of random scenes");
  g->add_option("--seed", gen.seed, "First seed for --random");
  g->add_option("--out", gen.out, "Output root")->required();
  g->add_option("--engine-config", gen.engine_config, "Engine constants file");
  g->add_option("--post-config", gen.post_config, "Postprocess config file");
  g->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::NonNegativeNumber);

  std::vector<std::string> files;
  auto* v = app.add_subcommand("validate", "Parse and validate program files");
  v->add_option("files", files, "Program files");

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "Synthesize programs for prompts");
  s->add_option("--prompts", sy.prompts, "Prompt file")->required();
  s->add_option("--out", sy.out, "Output root")->required();
  s->add_option("--config", sy.config, "Synthesis config file");
  s->add_option("--mock-replies", sy.mock, "JSON array of canned model replies (offline)");
  s->add_option("--examples", sy.examples, "Directory of example programs for the prompt");
  s->add_option("--jobs", sy.jobs, "Worker threads")->check(CLI::NonNegativeNumber);

  std::vector<std::string> argv_store = args;
  std::reverse(argv_store.begin(), argv_store.end());
  try {
    app.parse(argv_store);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << "\n";
    return kUsage;
  }

  try {
    if (*m) return cmd_mine(mine, out, err);
    if (*e) return cmd_eval(ev, out, err);
    if (*g) return cmd_gen(gen, out, err);
    if (*v) return cmd_validate(files, out);
    if (*s) return cmd_synth(sy, out, err);
  } catch (const UsageError& ue) {
    err << "error: " << ue.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace refmine::cli
