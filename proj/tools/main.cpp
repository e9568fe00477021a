#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "checks.hpp"
#include "reactnav/harness.hpp"
#include "reactnav/scenario.hpp"
#include "reactnav/telemetry.hpp"

namespace {

using namespace reactnav;

void print_summary(const RunLog& log) {
  const RunSummary& s = log.summary;
  std::printf("%-14s %-13s %-9s t=%-8s min_range=%.3f  solver mean/max %.2f/%.2f ms  converged %.1f%%\n",
              log.scenario.c_str(), std::string(to_string(log.controller)).c_str(),
              to_string(s.termination),
              s.time_to_setpoint ? std::to_string(*s.time_to_setpoint).substr(0, 6).c_str() : "DNF",
              s.min_clearance, s.mean_solver_ms, s.max_solver_ms, 100.0 * s.converged_fraction);
}

int run(const std::string& file, const std::optional<std::string>& controller,
        const std::string& out_dir, const std::optional<std::uint64_t>& seed) {
  ScenarioSpec spec = load_scenario(file);
  if (controller) spec.controller = parse_controller(*controller);
  if (seed) spec.rng_seed = *seed;
  const RunLog log = run_scenario(spec);
  emit_outputs(log, out_dir);
  print_summary(log);
  return 0;
}

int compare(const std::string& file, const std::string& out_dir) {
  const ScenarioSpec base = load_scenario(file);
  std::vector<RunLog> logs;
  for (ControllerKind kind :
       {ControllerKind::kNmpc, ControllerKind::kApfBaseline, ControllerKind::kApfEnhanced}) {
    ScenarioSpec spec = base;
    spec.controller = kind;
    logs.push_back(run_scenario(spec));
    emit_outputs(logs.back(), std::filesystem::path(out_dir) / std::string(to_string(kind)));
    print_summary(logs.back());
  }
  emit_summary(logs, std::filesystem::path(out_dir) / "summary.csv");
  return 0;
}

int check() {
  int failed = 0;
  for (const tools::CheckResult& r : tools::run_property_checks()) {
    std::printf("[%s] %s  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    if (!r.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive quadrotor navigation: NMPC and potential-field scenario runner"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = "out";
  std::optional<std::string> controller;
  std::optional<std::uint64_t> seed;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one controller on a scenario");
  run_cmd->add_option("scenario", scenario, "Scenario YAML file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--controller", controller, "Override the scenario controller")
      ->check(CLI::IsMember({"nmpc", "apf-baseline", "apf-enhanced"}));
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--seed", seed, "Override the scenario RNG seed");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Run all three controllers on a scenario");
  compare_cmd->add_option("scenario", scenario, "Scenario YAML file")
      ->required()
      ->check(CLI::ExistingFile);
  compare_cmd->add_option("--out", out_dir, "Output directory");

  app.add_subcommand("check", "Run property checks on toy problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(scenario, controller, out_dir, seed);
    if (*compare_cmd) return compare(scenario, out_dir);
    return check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
