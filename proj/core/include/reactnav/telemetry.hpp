#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "reactnav/harness.hpp"

namespace reactnav {

/// Column order of rows.csv.
inline constexpr const char* kRowsHeader =
    "t,px,py,pz,vx,vy,vz,phi,theta,T_cmd,phi_cmd,theta_cmd,min_range,solver_ms,fpr,infeas,converged";

inline constexpr const char* kSummaryHeader =
    "scenario,controller,seed,termination,time_to_setpoint,min_clearance,mean_solver_ms,"
    "max_solver_ms,converged_fraction,collision";

/// Raised when an output file cannot be written; the message names the path.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_rows_csv(std::ostream& out, const RunLog& log);
/// Header plus one line per run. time_to_setpoint is written as DNF when empty.
void write_summary_csv(std::ostream& out, std::span<const RunLog> logs);

/// Writes rows.csv, summary.csv, solver.csv and the plot-data files
/// (path.csv, solver_time.csv, fpr.csv, infeasibility.csv, min_distance.csv,
/// plus forces.csv for APF runs) into `dir`, creating it if needed.
void emit_outputs(const RunLog& log, const std::filesystem::path& dir);

/// summary.csv covering several runs.
void emit_summary(std::span<const RunLog> logs, const std::filesystem::path& file);

}  // namespace reactnav
