#include "refmine/mining.hpp"

#include "refmine/oracle.hpp"

#include <chrono>

namespace refmine {

ScenarioSet mine_one(const dsl::Program& program, const std::string& description, const LogBundle& filtered,
                     const PredicateBackend& engine, const MiningOptions& options) {
  dsl::ExecOptions exec = options.exec;
  exec.description = description;
  const auto raw = dsl::execute_program(program, engine, exec);
  return postprocess(raw.scenario, filtered, options.post);
}

ScenarioSet reference_mine(const dsl::Program& program, const std::string& description, const LogBundle& bundle,
                           const MiningOptions& options) {
  const LogBundle filtered = filter_bundle(bundle, options.post);
  const OracleBackend oracle(filtered, options.constants);
  return mine_one(program, description, filtered, oracle, options);
}

namespace {

void run_log(const std::vector<MiningJob>& jobs, const LogBundle& bundle, const MiningOptions& options,
             bool engine_parallel, MiningResult* out) {
  const LogBundle filtered = filter_bundle(bundle, options.post);
  const Engine engine(filtered, options.constants, engine_parallel);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    MiningResult& r = out[j];
    r.description = jobs[j].description;
    r.log_id = bundle.log_id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.scenario = mine_one(*jobs[j].program, jobs[j].description, filtered, engine, options);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
}

}  // namespace

std::vector<MiningResult> mine_all(const std::vector<MiningJob>& jobs, const std::vector<const LogBundle*>& logs,
                                   const MiningOptions& options) {
  std::vector<MiningResult> out(jobs.size() * logs.size());
  const long n = static_cast<long>(logs.size());
  if (!options.parallel) {
    for (long i = 0; i < n; ++i) run_log(jobs, *logs[i], options, false, out.data() + i * jobs.size());
    return out;
  }
  if (n == 1) {
    run_log(jobs, *logs[0], options, true, out.data());
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) run_log(jobs, *logs[i], options, false, out.data() + i * jobs.size());
  return out;
}

}  // namespace refmine
