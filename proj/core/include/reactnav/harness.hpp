#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "reactnav/scenario.hpp"

namespace reactnav {

/// One control tick. The state is sampled at time t, before the command is applied.
struct StepRow {
  double t = 0.0;
  UavState x;
  ControlInput u;
  double thrust_command = 0.0;  ///< normalized motor command for u.thrust
  Vector3 setpoint = Vector3::Zero();  ///< shifted way-point for APF runs
  double min_range = 0.0;
  double true_distance = 0.0;
  // NMPC diagnostics (also filled for the tracking NMPC behind the APF).
  bool solved = false;  ///< false on the terminal row, which carries no solve
  double solver_ms = 0.0;
  double fpr = 0.0;
  double infeasibility = 0.0;
  bool converged = false;
  std::size_t outer_iters = 0;
  std::size_t inner_iters = 0;
  std::size_t circles = 0;
  std::size_t segments = 0;
  // APF forces; zero for NMPC runs.
  Vector2 f_a = Vector2::Zero();
  Vector2 f_r = Vector2::Zero();
  Vector2 f_total = Vector2::Zero();
};

enum class Termination { kArrived, kTimeout, kCollision };

const char* to_string(Termination t);

struct RunSummary {
  std::optional<double> time_to_setpoint;  ///< empty when the run did not finish
  double min_clearance = 0.0;
  double min_true_distance = 0.0;
  double mean_solver_ms = 0.0;
  double max_solver_ms = 0.0;
  double converged_fraction = 0.0;
  bool collision = false;
  Termination termination = Termination::kTimeout;
  std::size_t steps = 0;
};

struct RunLog {
  std::string scenario;
  ControllerKind controller = ControllerKind::kNmpc;
  std::uint64_t seed = 0;
  Vector3 setpoint = Vector3::Zero();
  double arrival_radius = 0.2;
  double arrival_dwell = 1.0;
  double collision_distance = 0.05;
  Termination termination = Termination::kTimeout;
  std::vector<StepRow> rows;
  RunSummary summary;
};

/// Closed loop at the horizon sampling time: raycast, perception, control,
/// RK4 plant. Stops on arrival (radius held for the dwell time), timeout, or
/// collision with the true geometry.
RunLog run_scenario(const ScenarioSpec& spec);

/// Minimum over rows of the per-step minimum scan range.
double metric_min_clearance(const RunLog& log);

/// First time the vehicle enters the arrival radius and stays inside for the
/// dwell time (or until the log ends). Empty if that never happens.
std::optional<double> metric_time_to_setpoint(const RunLog& log);

/// Recomputes the summary from the rows.
RunSummary summarize(const RunLog& log);

}  // namespace reactnav
