// Mining throughput: serial reference engine vs OpenMP engine vs brute-force oracle.
#include "refmine/dsl/parser.hpp"
#include "refmine/mining.hpp"
#include "refmine/synthgen.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace refmine;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refmine mining benchmark"};
  int n_logs = 100;
  double duration = 20.0;
  double rate = 10.0;
  std::uint64_t seed = 7000;
  int repeats = 3;
  bool oracle = true;
  app.add_option("--logs", n_logs, "number of synthetic logs")->check(CLI::PositiveNumber);
  app.add_option("--duration", duration, "log duration in seconds (5..20)");
  app.add_option("--rate", rate, "sample rate in Hz");
  app.add_option("--seed", seed, "first scene seed");
  app.add_option("--repeats", repeats, "timed repeats per mode; the best is reported")->check(CLI::PositiveNumber);
  app.add_flag("!--no-oracle", oracle, "skip the brute-force oracle pass");
  CLI11_PARSE(app, argc, argv);

  const auto queries = synth::default_queries();
  std::vector<dsl::Program> programs;
  for (const auto& q : queries) {
    auto r = dsl::parse_program(q.source);
    if (!r.ok()) throw std::runtime_error("default query " + q.id + " does not parse");
    programs.push_back(*r.program);
  }
  std::vector<MiningJob> jobs;
  for (std::size_t i = 0; i < programs.size(); ++i) jobs.push_back({queries[i].description, &programs[i]});

  // random scripts draw motions for their own duration, so keep the seeds that match
  std::vector<LogBundle> logs;
  std::size_t boxes = 0;
  for (std::uint64_t s = seed; logs.size() < static_cast<std::size_t>(n_logs); ++s) {
    auto script = synth::random_script(s);
    if (script.duration_s != duration) continue;
    script.rate_hz = rate;
    logs.push_back(synth::generate_scene(script).bundle);
    for (const auto& t : logs.back().tracks) boxes += t.boxes.size();
  }
  std::vector<const LogBundle*> ptrs;
  for (const auto& l : logs) ptrs.push_back(&l);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("%d logs x %zu programs, %zu boxes, %d thread(s)\n", n_logs, jobs.size(), boxes, threads);

  auto timed = [&](bool parallel, std::vector<MiningResult>& out) {
    MiningOptions opt;
    opt.parallel = parallel;
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = Clock::now();
      out = mine_all(jobs, ptrs, opt);
      best = std::min(best, since(t0));
    }
    return best;
  };
  std::vector<MiningResult> serial, parallel;
  const double t_serial = timed(false, serial);
  const double t_parallel = timed(true, parallel);
  std::printf("%-10s %10.3f s\n", "serial", t_serial);
  std::printf("%-10s %10.3f s  (x%.2f)\n", "openmp", t_parallel, t_serial / t_parallel);

  std::size_t diffs = 0;
  for (std::size_t i = 0; i < serial.size(); ++i) diffs += serial[i].scenario != parallel[i].scenario;

  if (oracle) {
    const auto t0 = Clock::now();
    for (std::size_t l = 0; l < logs.size(); ++l) {
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto ref = reference_mine(programs[j], jobs[j].description, logs[l]);
        const auto& got = parallel[l * jobs.size() + j].scenario;
        diffs += !got || *got != ref;
      }
    }
    const double t_oracle = since(t0);
    std::printf("%-10s %10.3f s  (x%.2f slower than serial)\n", "oracle", t_oracle, t_oracle / t_serial);
  }
  std::printf("result differences: %zu\n", diffs);
  return diffs == 0 ? 0 : 1;
}
