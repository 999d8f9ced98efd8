// starlab [scenario] --config <file> [--config <file> ...] [--out <dir>] [--seed N] [--verify]

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "config.hpp"
#include "scenarios.hpp"

namespace fs = std::filesystem;
using namespace starlab::cli;

namespace {

struct Job {
  std::string source;  // config path, or "(defaults)"
  ScenarioConfig config;
  fs::path out;
  RunReport report;
};

unsigned worker_cap(std::size_t jobs) {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STARLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) cap = static_cast<unsigned>(v);
    } catch (const std::exception&) {
      std::cerr << "ignoring STARLAB_THREADS=" << env << '\n';
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(cap, jobs));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"starlab: self-similar expanding stars laboratory"};
  app.set_version_flag("--version", kVersion);
  std::optional<std::string> scenario_name;
  std::vector<std::string> configs;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool verify = false;
  app.add_option("scenario", scenario_name,
                 "profile | expansion | phase | evolve-ss | evolve-linear | evolve-thermo | verify; "
                 "defaults to each config's scenario key");
  app.add_option("--config", configs, "JSON configuration; repeat for a sweep")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (overrides the out key)");
  app.add_option("--seed", seed, "seed for randomized initial shapes");
  app.add_flag("--verify", verify, "treat runtime events as failures (exit 2)");
  CLI11_PARSE(app, argc, argv);

  std::optional<Scenario> scenario;
  if (scenario_name) {
    scenario = scenario_from_string(*scenario_name);
    if (!scenario) {
      std::cerr << "config: unknown scenario '" << *scenario_name << "'\n";
      return 1;
    }
  }
  if (configs.empty() && scenario != Scenario::Verify) {
    std::cerr << "config: --config is required unless the scenario is verify\n";
    return 1;
  }

  // Validate everything before running anything.
  std::vector<Job> jobs;
  bool config_error = false;
  auto add_job = [&](const std::string& source, const std::string& raw) {
    ValidationResult v = validate_config(raw, scenario);
    if (auto* errs = std::get_if<std::vector<std::string>>(&v)) {
      std::cerr << source << ": " << errs->size() << " configuration error(s)\n";
      for (const std::string& e : *errs) std::cerr << "  config: " << e << '\n';
      config_error = true;
      return;
    }
    Job j{source, std::get<ScenarioConfig>(std::move(v)), {}, {}};
    if (seed) j.config.seed = *seed;
    jobs.push_back(std::move(j));
  };
  if (configs.empty()) add_job("(defaults)", "{}");
  for (const std::string& path : configs) {
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    add_job(path, ss.str());
  }
  if (config_error) return 1;

  for (Job& j : jobs) {
    const fs::path base = out ? fs::path(*out) : fs::path(j.config.out_dir);
    j.out = jobs.size() > 1 ? base / fs::path(j.source).stem() : base;
    if (out) j.config.out_dir = j.out.string();
  }

  // One worker per scenario; jobs share no mutable state.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      jobs[i].report = run_scenario(jobs[i].config, jobs[i].out);
    }
  };
  const unsigned n = worker_cap(jobs.size());
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  int code = 0;
  for (const Job& j : jobs) {
    const RunReport& r = j.report;
    if (jobs.size() > 1) std::cout << "== " << j.source << " -> " << j.out.string() << '\n';
    if (!r.text.empty()) std::cout << r.text << '\n';
    for (const std::string& e : r.events) std::cout << "event: " << e << '\n';
    if (!r.error.empty()) {
      std::cerr << r.error << '\n';
      code = 2;
    }
    if (r.failed || (verify && !r.events.empty())) code = 2;
  }
  return code;
}
