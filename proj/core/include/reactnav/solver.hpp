#pragma once

#include <Eigen/Core>
#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "reactnav/model.hpp"

namespace reactnav {

/// Axis-aligned box Z = {z : lower <= z <= upper}.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box uniform(std::size_t n, double lo, double hi);
  std::size_t size() const { return static_cast<std::size_t>(lower.size()); }
  bool contains(const Eigen::VectorXd& z) const;
};

/// Per-input bounds, replicated over the horizon.
struct BoxBounds {
  InputVector u_min{5.0, -0.2, -0.2};
  InputVector u_max{13.5, 0.2, 0.2};

  void validate() const;
  Box replicate(std::size_t horizon) const;
};

void project_box_inplace(Eigen::Ref<Eigen::VectorXd> z, const Box& box);
Eigen::VectorXd project_box(const Eigen::VectorXd& z, const Box& box);

/// f(z), plus its gradient when `grad` is non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& z, Eigen::VectorXd* grad)>;

/// Smooth objective f + q ||G||^2 family consumed by the penalty loop.
class PenalizedProblem {
 public:
  virtual ~PenalizedProblem() = default;
  virtual std::size_t dimension() const = 0;
  virtual double value(const Eigen::VectorXd& z, double q) const = 0;
  virtual double value_and_gradient(const Eigen::VectorXd& z, double q,
                                    Eigen::VectorXd& grad) const = 0;
  virtual Eigen::VectorXd constraints(const Eigen::VectorXd& z) const = 0;
};

/// Wall-clock or simulated budget shared by every inner solve of one call.
///
/// With `simulated_eval_seconds` set, elapsed time is the number of oracle
/// calls times that cost, which makes budgeted runs reproducible.
class SolveBudget {
 public:
  explicit SolveBudget(double seconds,
                       std::optional<double> simulated_eval_seconds = std::nullopt);

  void charge_evaluation() { ++evaluations_; }
  double elapsed() const;
  bool exhausted() const { return elapsed() >= seconds_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  double seconds_;
  std::optional<double> simulated_eval_seconds_;
  std::chrono::steady_clock::time_point start_;
  std::size_t evaluations_ = 0;
};

struct PanocOptions {
  double fpr_tol = 1e-3;
  std::size_t max_iters = 2000;
  std::size_t lbfgs_memory = 10;
};

enum class SolverStatus { kConverged, kBudgetExhausted, kMaxIterations, kNotFinite };

const char* to_string(SolverStatus status);

struct PanocResult {
  Eigen::VectorXd z;   ///< forward-backward point, always inside the box
  double fpr_norm = 0.0;  ///< ||z - P(z - gamma grad f(z))||_inf / gamma
  double gamma = 0.0;
  std::size_t iterations = 0;
  SolverStatus status = SolverStatus::kMaxIterations;
};

/// Snapshot passed to an observer after every accepted step.
struct PanocStep {
  const Eigen::VectorXd& z_before;
  const Eigen::VectorXd& z_after;
  double gamma;
  double fbe_before;
  double fbe_after;
  double tau;  ///< 0 means the plain projected-gradient step was taken
};

using PanocObserver = std::function<void(const PanocStep&)>;

/// PANOC for min f(z) s.t. z in box, globalized on the forward-backward
/// envelope with L-BFGS directions.
PanocResult panoc_solve(const ObjectiveFn& f, const Box& box, const Eigen::VectorXd& z0,
                        const PanocOptions& options, SolveBudget* budget = nullptr,
                        const PanocObserver& observer = {});

struct SolverConfig {
  double fpr_tol = 1e-3;
  double constraint_tol = 1e-2;
  std::vector<double> q_schedule{1e3, 4e3, 16e3, 64e3};
  std::size_t max_inner_iters = 2000;
  double time_budget = 0.04;
  std::size_t lbfgs_memory = 10;
  /// Stop after the first stage whose ||G||_inf <= constraint_tol.
  bool early_exit = true;
  std::optional<double> simulated_eval_seconds;

  void validate() const;
};

struct PenaltyStage {
  double q = 0.0;
  Eigen::VectorXd z;
  double fpr_norm = 0.0;
  double infeasibility = 0.0;      ///< ||G||_2
  double infeasibility_max = 0.0;  ///< ||G||_inf
  std::size_t iterations = 0;
  SolverStatus status = SolverStatus::kMaxIterations;
};

struct SolverOutput {
  Eigen::VectorXd z;
  double fpr_norm = 0.0;
  double infeasibility = 0.0;
  double infeasibility_max = 0.0;
  std::size_t outer_iters = 0;
  std::size_t inner_iters = 0;
  double elapsed = 0.0;
  bool converged = false;  ///< last inner solve reached fpr_tol
  bool feasible = false;   ///< ||G||_inf <= constraint_tol at the returned point
  SolverStatus status = SolverStatus::kMaxIterations;
  std::vector<PenaltyStage> stages;
};

/// Quadratic penalty outer loop: one warm-started PANOC solve per q.
SolverOutput penalty_solve(const PenalizedProblem& problem, const Box& box,
                           const Eigen::VectorXd& z_warm, const SolverConfig& config);

/// Shift an input sequence one step and repeat the last input.
Eigen::VectorXd warm_start_shift(const Eigen::VectorXd& previous, std::size_t input_dim = 3);

/// Stateful receding-horizon wrapper that carries the warm start between solves.
class RecedingHorizonSolver {
 public:
  RecedingHorizonSolver(BoxBounds bounds, SolverConfig config, std::size_t horizon);

  SolverOutput solve(const PenalizedProblem& problem, const InputVector& steady_input);
  void reset() { previous_.reset(); }

  const SolverConfig& config() const { return config_; }
  const Box& box() const { return box_; }
  std::size_t horizon() const { return horizon_; }

 private:
  SolverConfig config_;
  std::size_t horizon_;
  Box box_;
  std::optional<Eigen::VectorXd> previous_;
};

}  // namespace reactnav
