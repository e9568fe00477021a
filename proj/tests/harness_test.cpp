#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "reactnav/harness.hpp"
#include "reactnav/telemetry.hpp"

namespace reactnav {
namespace {

const std::filesystem::path kDir = REACTNAV_SCENARIO_DIR;

ScenarioSpec empty_scene() {
  ScenarioSpec spec;
  spec.name = "empty";
  spec.start = Vector3(0, 0, 1);
  spec.setpoint = Vector3(3, 0, 1);
  spec.duration_max = 15.0;
  spec.solver.simulated_eval_seconds = 2e-5;
  return spec;
}

StepRow row_at(double t, const Vector3& p, double range) {
  StepRow r;
  r.t = t;
  r.x = UavState::hover_at(p);
  r.min_range = range;
  r.true_distance = range;
  return r;
}

RunLog log_with(std::vector<StepRow> rows) {
  RunLog log;
  log.setpoint = Vector3(1, 0, 1);
  log.arrival_radius = 0.2;
  log.arrival_dwell = 1.0;
  log.rows = std::move(rows);
  return log;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Metrics, MinClearanceOfTwoRows) {
  const RunLog log = log_with({row_at(0, Vector3::Zero(), 1.0), row_at(0.05, Vector3::Zero(), 0.7)});
  EXPECT_EQ(metric_min_clearance(log), 0.7);
}

TEST(Metrics, TimeToSetpointStartInside) {
  std::vector<StepRow> rows;
  for (int k = 0; k < 30; ++k) rows.push_back(row_at(0.05 * k, Vector3(1.05, 0, 1), 25.0));
  EXPECT_EQ(metric_time_to_setpoint(log_with(rows)), 0.0);
}

TEST(Metrics, TimeToSetpointRequiresDwell) {
  std::vector<StepRow> rows;
  // Passes through at t = 0.5 s without stopping, then settles from t = 2 s.
  for (int k = 0; k <= 80; ++k) {
    const double t = 0.05 * k;
    const bool inside = (k >= 10 && k <= 12) || k >= 40;
    rows.push_back(row_at(t, inside ? Vector3(1, 0.1, 1) : Vector3(0, 0, 1), 25.0));
  }
  const auto t = metric_time_to_setpoint(log_with(rows));
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, 2.0, 1e-12);
}

TEST(Metrics, NeverArrivesIsEmpty) {
  std::vector<StepRow> rows;
  for (int k = 0; k < 30; ++k) rows.push_back(row_at(0.05 * k, Vector3(0, 0, 1), 25.0));
  const RunLog log = log_with(rows);
  EXPECT_FALSE(metric_time_to_setpoint(log).has_value());
  std::ostringstream out;
  RunLog summarized = log;
  summarized.summary = summarize(log);
  write_summary_csv(out, std::span<const RunLog>(&summarized, 1));
  EXPECT_NE(out.str().find("DNF"), std::string::npos);
}

TEST(Metrics, SummaryFlagsCollision) {
  RunLog log = log_with({row_at(0, Vector3::Zero(), 1.0), row_at(0.05, Vector3::Zero(), 0.01)});
  EXPECT_TRUE(summarize(log).collision);
}

TEST(RunScenario, EmptySceneArrivesWithoutInfeasibility) {
  const RunLog log = run_scenario(empty_scene());
  EXPECT_EQ(log.termination, Termination::kArrived);
  ASSERT_TRUE(log.summary.time_to_setpoint.has_value());
  // Bang-bang bound with the largest horizontal acceleration the box allows.
  const double a_max = 13.5 * std::sin(0.2);
  EXPECT_GE(*log.summary.time_to_setpoint, 2.0 * std::sqrt(1.4 / a_max));
  EXPECT_LE(*log.summary.time_to_setpoint, 8.0);
  EXPECT_EQ(metric_min_clearance(log), 25.0);
  const Box box = BoxBounds{}.replicate(1);
  for (const StepRow& r : log.rows) {
    // Obstacle slots are fillers here; only the rate residuals can be nonzero.
    EXPECT_LE(r.infeasibility, empty_scene().solver.constraint_tol);
    if (r.solved) { EXPECT_TRUE(box.contains(r.u.to_vector())); }
  }
}

TEST(RunScenario, RowsAtFixedCadence) {
  const RunLog log = run_scenario(empty_scene());
  ASSERT_GT(log.rows.size(), 10u);
  for (std::size_t k = 0; k < log.rows.size(); ++k)
    EXPECT_NEAR(log.rows[k].t, 0.05 * static_cast<double>(k), 1e-9);
  EXPECT_FALSE(log.rows.back().solved);
  EXPECT_TRUE(log.rows.front().solved);
}

TEST(RunScenario, TimeoutWhenBlocked) {
  ScenarioSpec spec = empty_scene();
  spec.duration_max = 1.0;
  const RunLog log = run_scenario(spec);
  EXPECT_EQ(log.termination, Termination::kTimeout);
  EXPECT_FALSE(log.summary.time_to_setpoint.has_value());
}

TEST(RunScenario, SummaryDerivableFromRows) {
  ScenarioSpec spec = load_scenario(kDir / "cylinder.yaml");
  spec.solver.simulated_eval_seconds = 2e-5;
  spec.duration_max = 3.0;
  const RunLog log = run_scenario(spec);
  const RunSummary s = summarize(log);
  EXPECT_EQ(s.min_clearance, log.summary.min_clearance);
  EXPECT_EQ(s.mean_solver_ms, log.summary.mean_solver_ms);
  EXPECT_EQ(s.converged_fraction, log.summary.converged_fraction);
  EXPECT_EQ(s.time_to_setpoint, log.summary.time_to_setpoint);
}

TEST(RunScenario, ApfRunsLogForces) {
  ScenarioSpec spec = load_scenario(kDir / "cylinder.yaml");
  spec.controller = ControllerKind::kApfEnhanced;
  spec.solver.simulated_eval_seconds = 2e-5;
  spec.duration_max = 10.0;
  const RunLog log = run_scenario(spec);
  bool pushed = false;
  for (const StepRow& r : log.rows) {
    EXPECT_LE(r.f_total.norm(), 1.0 + 1e-12);
    pushed |= r.f_r.norm() > 0.0;
  }
  EXPECT_TRUE(pushed);
}

TEST(RunScenario, DeterministicCsvOutput) {
  ScenarioSpec spec = load_scenario(kDir / "two_walls.yaml");
  spec.solver.simulated_eval_seconds = 2e-5;
  spec.duration_max = 4.0;
  const auto base = std::filesystem::temp_directory_path() / "reactnav_determinism";
  std::filesystem::remove_all(base);
  emit_outputs(run_scenario(spec), base / "a");
  emit_outputs(run_scenario(spec), base / "b");
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(base / "a")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(entry.path()), slurp(base / "b" / name)) << name;
    ++files;
  }
  EXPECT_GE(files, 8u);
  const std::string rows = slurp(base / "a" / "rows.csv");
  EXPECT_EQ(rows.substr(0, rows.find('\n')), kRowsHeader);
  std::filesystem::remove_all(base);
}

TEST(RunScenario, DifferentSeedsDiffer) {
  ScenarioSpec spec = load_scenario(kDir / "cylinder.yaml");
  spec.solver.simulated_eval_seconds = 2e-5;
  spec.duration_max = 1.0;
  std::ostringstream a, b;
  write_rows_csv(a, run_scenario(spec));
  spec.rng_seed = 2;
  write_rows_csv(b, run_scenario(spec));
  EXPECT_NE(a.str(), b.str());
}

TEST(Telemetry, SummaryHasOneRowPerRun) {
  const RunLog log = log_with({row_at(0, Vector3(1, 0, 1), 1.0)});
  const std::vector<RunLog> logs(3, log);
  std::ostringstream out;
  write_summary_csv(out, logs);
  const std::string s = out.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
  EXPECT_EQ(s.substr(0, s.find('\n')), kSummaryHeader);
}

TEST(Telemetry, UnwritableDirectoryNamesPath) {
  const RunLog log = log_with({row_at(0, Vector3(1, 0, 1), 1.0)});
  try {
    emit_outputs(log, "/proc/reactnav_cannot_write");
    FAIL();
  } catch (const OutputError& e) {
    EXPECT_NE(std::string(e.what()).find("reactnav_cannot_write"), std::string::npos);
  }
}

}  // namespace
}  // namespace reactnav
