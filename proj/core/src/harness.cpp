#include "reactnav/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace reactnav {
namespace {

constexpr double kTimeEps = 1e-9;

bool inside(const StepRow& row, const RunLog& log) {
  return (row.x.p - log.setpoint).norm() <= log.arrival_radius;
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kArrived: return "arrived";
    case Termination::kTimeout: return "timeout";
    case Termination::kCollision: return "collision";
  }
  return "unknown";
}

RunLog run_scenario(const ScenarioSpec& spec_in) {
  ScenarioSpec spec = spec_in;
  spec.model.ts = spec.horizon.ts;
  spec.validate();

  RunLog log;
  log.scenario = spec.name;
  log.controller = spec.controller;
  log.seed = spec.rng_seed;
  log.setpoint = spec.setpoint;
  log.arrival_radius = spec.arrival_radius;
  log.arrival_dwell = spec.arrival_dwell;
  log.collision_distance = spec.collision_distance;

  const bool nmpc = spec.controller == ControllerKind::kNmpc;
  const ApfMode apf_mode =
      spec.controller == ControllerKind::kApfBaseline ? ApfMode::kBaseline : ApfMode::kEnhanced;
  // APF runs pair the potential field with the same NMPC minus obstacle slots.
  const ObstacleCapacity capacity = nmpc ? spec.capacity : ObstacleCapacity{0, 0};
  const NmpcProblem problem(spec.model, spec.weights, spec.horizon, spec.rates, capacity);
  RecedingHorizonSolver solver(spec.box, spec.solver, spec.horizon.n);
  PackingConfig packing{capacity, spec.d_s, spec.consider_radius};
  ForceState forces;
  std::mt19937_64 rng(spec.rng_seed);

  const double ts = spec.horizon.ts;
  const double dt = ts / static_cast<double>(spec.plant_substeps);
  const InputVector hover = spec.model.hover_input().to_vector();
  UavState x = UavState::hover_at(spec.start);
  ControlInput u_prev = spec.model.hover_input();
  std::optional<double> inside_since;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * ts;
    StepRow row;
    row.t = t;
    row.x = x;
    row.setpoint = spec.setpoint;

    const Scan scan = raycast(spec.scene, Pose2{x.p.x(), x.p.y(), 0.0}, spec.lidar, rng);
    row.min_range = scan.min_range();
    row.true_distance = spec.scene.obstacle_distance(x.p.head<2>());

    if ((x.p - spec.setpoint).norm() <= spec.arrival_radius) {
      if (!inside_since) inside_since = t;
    } else {
      inside_since.reset();
    }

    std::optional<Termination> stop;
    if (row.true_distance < spec.collision_distance || !x.is_finite())
      stop = Termination::kCollision;
    else if (inside_since && t - *inside_since >= spec.arrival_dwell - kTimeEps)
      stop = Termination::kArrived;
    else if (t >= spec.duration_max - kTimeEps)
      stop = Termination::kTimeout;
    if (stop) {
      row.u = u_prev;
      row.thrust_command = thrust_to_command(u_prev.thrust, spec.model.thrust_constant);
      log.rows.push_back(row);
      log.termination = *stop;
      break;
    }

    ParameterVector rho;
    if (nmpc) {
      const Detections detected = detect(scan, spec.d_s, spec.detector);
      rho = pack_rho(x, References::setpoint(spec.setpoint, spec.model), u_prev, detected,
                     packing);
      row.circles = rho.retained_circles().size();
      row.segments = rho.retained_rects().size();
    } else {
      const PointCloud cloud = to_pointcloud(scan);
      const ApfOutput apf = apf_setpoint(spec.setpoint, x.p, cloud, apf_mode, forces, spec.apf);
      row.setpoint = apf.setpoint;
      row.f_a = apf.f_a;
      row.f_r = apf.f_r;
      row.f_total = apf.total;
      rho = pack_rho(x, References::setpoint(apf.setpoint, spec.model), u_prev, {}, packing);
    }

    const SolverOutput out = solver.solve(problem.bind(rho), hover);
    const ControlInput u = ControlInput::from_vector(out.z.head<3>());
    row.u = u;
    row.thrust_command = thrust_to_command(u.thrust, spec.model.thrust_constant);
    row.solved = true;
    row.solver_ms = 1e3 * out.elapsed;
    row.fpr = out.fpr_norm;
    row.infeasibility = out.infeasibility;
    row.converged = out.converged;
    row.outer_iters = out.outer_iters;
    row.inner_iters = out.inner_iters;
    log.rows.push_back(row);

    for (std::size_t s = 0; s < spec.plant_substeps; ++s) x = simulate_plant(x, u, spec.model, dt);
    u_prev = u;
  }

  log.summary = summarize(log);
  return log;
}

double metric_min_clearance(const RunLog& log) {
  double best = std::numeric_limits<double>::infinity();
  for (const StepRow& row : log.rows) best = std::min(best, row.min_range);
  return best;
}

std::optional<double> metric_time_to_setpoint(const RunLog& log) {
  const std::vector<StepRow>& rows = log.rows;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!inside(rows[k], log)) continue;
    bool held = true;
    for (std::size_t j = k; j < rows.size() && rows[j].t <= rows[k].t + log.arrival_dwell + kTimeEps;
         ++j) {
      if (!inside(rows[j], log)) {
        held = false;
        break;
      }
    }
    if (held) return rows[k].t;
  }
  return std::nullopt;
}

RunSummary summarize(const RunLog& log) {
  RunSummary s;
  s.steps = log.rows.size();
  s.termination = log.termination;
  s.min_clearance = metric_min_clearance(log);
  s.time_to_setpoint = metric_time_to_setpoint(log);
  s.min_true_distance = std::numeric_limits<double>::infinity();
  std::size_t solves = 0;
  std::size_t converged = 0;
  double total_ms = 0.0;
  for (const StepRow& row : log.rows) {
    s.min_true_distance = std::min(s.min_true_distance, row.true_distance);
    if (row.true_distance < log.collision_distance) s.collision = true;
    if (!row.solved) continue;
    ++solves;
    total_ms += row.solver_ms;
    s.max_solver_ms = std::max(s.max_solver_ms, row.solver_ms);
    if (row.converged) ++converged;
  }
  if (solves > 0) {
    s.mean_solver_ms = total_ms / static_cast<double>(solves);
    s.converged_fraction = static_cast<double>(converged) / static_cast<double>(solves);
  }
  return s;
}

}  // namespace reactnav
