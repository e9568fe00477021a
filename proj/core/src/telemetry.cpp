#include "reactnav/telemetry.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <system_error>

namespace reactnav {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open " + file.string() + " for writing");
  return out;
}

void write_file(const std::filesystem::path& file, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out = open(file);
  fn(out);
  out.flush();
  if (!out) throw OutputError("write failed: " + file.string());
}

void series(const std::filesystem::path& file, const char* header, const RunLog& log,
            const std::function<double(const StepRow&)>& value, bool solved_only) {
  write_file(file, [&](std::ostream& out) {
    out << "t," << header << '\n';
    for (const StepRow& row : log.rows) {
      if (solved_only && !row.solved) continue;
      out << num(row.t) << ',' << num(value(row)) << '\n';
    }
  });
}

}  // namespace

void write_rows_csv(std::ostream& out, const RunLog& log) {
  out << kRowsHeader << '\n';
  for (const StepRow& r : log.rows) {
    out << num(r.t) << ',' << num(r.x.p.x()) << ',' << num(r.x.p.y()) << ',' << num(r.x.p.z())
        << ',' << num(r.x.v.x()) << ',' << num(r.x.v.y()) << ',' << num(r.x.v.z()) << ','
        << num(r.x.phi) << ',' << num(r.x.theta) << ',' << num(r.thrust_command) << ','
        << num(r.u.phi_ref) << ',' << num(r.u.theta_ref) << ',' << num(r.min_range) << ','
        << num(r.solver_ms) << ',' << num(r.fpr) << ',' << num(r.infeasibility) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const RunLog> logs) {
  out << kSummaryHeader << '\n';
  for (const RunLog& log : logs) {
    const RunSummary& s = log.summary;
    out << log.scenario << ',' << to_string(log.controller) << ',' << log.seed << ','
        << to_string(s.termination) << ','
        << (s.time_to_setpoint ? num(*s.time_to_setpoint) : std::string("DNF")) << ','
        << num(s.min_clearance) << ',' << num(s.mean_solver_ms) << ',' << num(s.max_solver_ms)
        << ',' << num(s.converged_fraction) << ',' << (s.collision ? 1 : 0) << '\n';
  }
}

void emit_outputs(const RunLog& log, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create " + dir.string() + ": " + ec.message());

  write_file(dir / "rows.csv", [&](std::ostream& out) { write_rows_csv(out, log); });
  write_file(dir / "summary.csv", [&](std::ostream& out) {
    write_summary_csv(out, std::span<const RunLog>(&log, 1));
  });
  write_file(dir / "solver.csv", [&](std::ostream& out) {
    out << "step,elapsed_ms,fpr_norm,infeasibility,outer_iters,converged\n";
    for (std::size_t k = 0; k < log.rows.size(); ++k) {
      const StepRow& r = log.rows[k];
      if (!r.solved) continue;
      out << k << ',' << num(r.solver_ms) << ',' << num(r.fpr) << ',' << num(r.infeasibility)
          << ',' << r.outer_iters << ',' << (r.converged ? 1 : 0) << '\n';
    }
  });
  write_file(dir / "path.csv", [&](std::ostream& out) {
    out << "t,x,y,setpoint_x,setpoint_y\n";
    for (const StepRow& r : log.rows)
      out << num(r.t) << ',' << num(r.x.p.x()) << ',' << num(r.x.p.y()) << ','
          << num(r.setpoint.x()) << ',' << num(r.setpoint.y()) << '\n';
  });
  series(dir / "solver_time.csv", "solver_ms", log, [](const StepRow& r) { return r.solver_ms; },
         true);
  series(dir / "fpr.csv", "fpr", log, [](const StepRow& r) { return r.fpr; }, true);
  series(dir / "infeasibility.csv", "infeasibility", log,
         [](const StepRow& r) { return r.infeasibility; }, true);
  series(dir / "min_distance.csv", "min_range", log, [](const StepRow& r) { return r.min_range; },
         false);
  if (log.controller != ControllerKind::kNmpc) {
    write_file(dir / "forces.csv", [&](std::ostream& out) {
      out << "t,fa_x,fa_y,fr_x,fr_y,f_x,f_y\n";
      for (const StepRow& r : log.rows) {
        if (!r.solved) continue;
        out << num(r.t) << ',' << num(r.f_a.x()) << ',' << num(r.f_a.y()) << ','
            << num(r.f_r.x()) << ',' << num(r.f_r.y()) << ',' << num(r.f_total.x()) << ','
            << num(r.f_total.y()) << '\n';
      }
    });
  }
}

void emit_summary(std::span<const RunLog> logs, const std::filesystem::path& file) {
  if (file.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    if (ec) throw OutputError("cannot create " + file.parent_path().string() + ": " + ec.message());
  }
  write_file(file, [&](std::ostream& out) { write_summary_csv(out, logs); });
}

}  // namespace reactnav
