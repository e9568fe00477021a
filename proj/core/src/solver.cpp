#include "reactnav/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace reactnav {

Box Box::uniform(std::size_t n, double lo, double hi) {
  const auto size = static_cast<Eigen::Index>(n);
  return {Eigen::VectorXd::Constant(size, lo), Eigen::VectorXd::Constant(size, hi)};
}

bool Box::contains(const Eigen::VectorXd& z) const {
  return z.size() == lower.size() && (z.array() >= lower.array()).all() &&
         (z.array() <= upper.array()).all();
}

void BoxBounds::validate() const {
  if ((u_min.array() > u_max.array()).any())
    throw std::invalid_argument("box bounds: u_min must not exceed u_max");
}

Box BoxBounds::replicate(std::size_t horizon) const {
  const auto n = static_cast<Eigen::Index>(horizon);
  return {u_min.replicate(n, 1), u_max.replicate(n, 1)};
}

void project_box_inplace(Eigen::Ref<Eigen::VectorXd> z, const Box& box) {
  z = z.cwiseMax(box.lower).cwiseMin(box.upper);
}

Eigen::VectorXd project_box(const Eigen::VectorXd& z, const Box& box) {
  Eigen::VectorXd out = z;
  project_box_inplace(out, box);
  return out;
}

SolveBudget::SolveBudget(double seconds, std::optional<double> simulated_eval_seconds)
    : seconds_(seconds),
      simulated_eval_seconds_(simulated_eval_seconds),
      start_(std::chrono::steady_clock::now()) {}

double SolveBudget::elapsed() const {
  if (simulated_eval_seconds_) return static_cast<double>(evaluations_) * *simulated_eval_seconds_;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kBudgetExhausted: return "budget_exhausted";
    case SolverStatus::kMaxIterations: return "max_iterations";
    case SolverStatus::kNotFinite: return "not_finite";
  }
  return "unknown";
}

namespace {

/// Limited-memory BFGS on the fixed-point residual map.
class Lbfgs {
 public:
  explicit Lbfgs(std::size_t memory) : memory_(memory) {}

  void reset() { pairs_.clear(); }

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y, double residual_norm) {
    if (memory_ == 0) return;
    const double sy = s.dot(y);
    const double ss = s.squaredNorm();
    // Cautious update: keep only pairs with enough curvature.
    if (!(sy > 1e-10 * ss * std::max(residual_norm, 1e-12)) || !(ss > 0.0)) return;
    if (pairs_.size() == memory_) pairs_.pop_front();
    pairs_.push_back({s, y, 1.0 / sy});
  }

  /// Returns H * q via the two-loop recursion; H0 = (s'y / y'y) I.
  Eigen::VectorXd apply(const Eigen::VectorXd& q_in) {
    Eigen::VectorXd q = q_in;
    if (pairs_.empty()) return q;
    alpha_.resize(pairs_.size());
    for (std::size_t i = pairs_.size(); i-- > 0;) {
      alpha_[i] = pairs_[i].rho * pairs_[i].s.dot(q);
      q.noalias() -= alpha_[i] * pairs_[i].y;
    }
    const Pair& last = pairs_.back();
    q *= 1.0 / (last.rho * last.y.squaredNorm());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const double beta = pairs_[i].rho * pairs_[i].y.dot(q);
      q.noalias() += (alpha_[i] - beta) * pairs_[i].s;
    }
    return q;
  }

 private:
  struct Pair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;
  };
  std::size_t memory_;
  std::deque<Pair> pairs_;
  std::vector<double> alpha_;
};

bool finite(double v) { return std::isfinite(v); }

constexpr double kGammaLCoeff = 0.95;
constexpr std::size_t kMaxLineSearch = 12;

}  // namespace

PanocResult panoc_solve(const ObjectiveFn& f, const Box& box, const Eigen::VectorXd& z0,
                        const PanocOptions& options, SolveBudget* budget,
                        const PanocObserver& observer) {
  if (static_cast<std::size_t>(z0.size()) != box.size())
    throw std::invalid_argument("panoc_solve: z0 and box dimensions differ");

  const Eigen::Index n = z0.size();
  auto eval = [&](const Eigen::VectorXd& z, Eigen::VectorXd* g) {
    if (budget) budget->charge_evaluation();
    return f(z, g);
  };

  PanocResult result;
  Eigen::VectorXd z = project_box(z0, box);
  Eigen::VectorXd grad(n);
  double fz = eval(z, &grad);
  result.z = z;
  if (!finite(fz) || !grad.allFinite()) {
    result.status = SolverStatus::kNotFinite;
    return result;
  }

  // Local Lipschitz estimate from a finite-difference probe of the gradient.
  double lipschitz;
  {
    Eigen::VectorXd delta = (1e-6 * z.cwiseAbs()).cwiseMax(1e-6);
    Eigen::VectorXd grad_probe(n);
    eval(z + delta, &grad_probe);
    lipschitz = (grad_probe - grad).norm() / delta.norm();
    if (!finite(lipschitz) || lipschitz < 1e-8) lipschitz = 1e-8;
  }
  double gamma = kGammaLCoeff / lipschitz;

  Lbfgs lbfgs(options.lbfgs_memory);
  Eigen::VectorXd zbar(n), r(n), z_prev(n), r_prev(n), d(n);
  Eigen::VectorXd z_new(n), grad_new(n), zbar_new(n), r_new(n);
  bool have_prev = false;

  auto forward_backward = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& g,
                              Eigen::VectorXd& bar, Eigen::VectorXd& res) {
    bar = at - gamma * g;
    project_box_inplace(bar, box);
    res = at - bar;
  };

  forward_backward(z, grad, zbar, r);

  for (std::size_t iter = 0;; ++iter) {
    // Backtrack on L until the descent lemma holds between z and zbar.
    double f_bar = eval(zbar, nullptr);
    for (int guard = 0; guard < 60; ++guard) {
      const double bound = fz - grad.dot(r) + 0.5 * lipschitz * r.squaredNorm() +
                           1e-12 * (1.0 + std::abs(fz));
      if (finite(f_bar) && f_bar <= bound) break;
      lipschitz *= 2.0;
      gamma *= 0.5;
      lbfgs.reset();
      have_prev = false;
      forward_backward(z, grad, zbar, r);
      f_bar = eval(zbar, nullptr);
    }

    result.z = zbar;
    result.gamma = gamma;
    result.iterations = iter;
    result.fpr_norm = r.lpNorm<Eigen::Infinity>() / gamma;

    if (!finite(f_bar)) {
      result.status = SolverStatus::kNotFinite;
      return result;
    }
    if (result.fpr_norm <= options.fpr_tol) {
      result.status = SolverStatus::kConverged;
      return result;
    }
    if (iter >= options.max_iters) {
      result.status = SolverStatus::kMaxIterations;
      return result;
    }
    if (budget && budget->exhausted()) {
      result.status = SolverStatus::kBudgetExhausted;
      return result;
    }

    if (have_prev) lbfgs.update(z - z_prev, r - r_prev, r.norm());
    d = lbfgs.apply(r);

    const double fbe = fz - grad.dot(r) + r.squaredNorm() / (2.0 * gamma);
    const double sigma = (1.0 - gamma * lipschitz) / (4.0 * gamma);
    const double required = fbe - sigma * r.squaredNorm();

    double tau = 1.0;
    double f_new = 0.0;
    double fbe_new = 0.0;
    bool accepted = false;
    if (d.allFinite()) {
      for (std::size_t ls = 0; ls < kMaxLineSearch; ++ls) {
        z_new = z - (1.0 - tau) * r - tau * d;
        f_new = eval(z_new, &grad_new);
        if (finite(f_new) && grad_new.allFinite()) {
          forward_backward(z_new, grad_new, zbar_new, r_new);
          fbe_new = f_new - grad_new.dot(r_new) + r_new.squaredNorm() / (2.0 * gamma);
          if (fbe_new <= required) {
            accepted = true;
            break;
          }
        }
        tau *= 0.5;
      }
    }
    if (!accepted) {
      // Plain projected-gradient step; sufficient decrease holds by the
      // Lipschitz check above.
      tau = 0.0;
      z_new = zbar;
      f_new = eval(z_new, &grad_new);
      if (!finite(f_new) || !grad_new.allFinite()) {
        result.status = SolverStatus::kNotFinite;
        return result;
      }
      forward_backward(z_new, grad_new, zbar_new, r_new);
      fbe_new = f_new - grad_new.dot(r_new) + r_new.squaredNorm() / (2.0 * gamma);
    }

    if (observer) observer(PanocStep{z, z_new, gamma, fbe, fbe_new, tau});

    z_prev.swap(z);
    r_prev.swap(r);
    have_prev = true;
    z.swap(z_new);
    grad.swap(grad_new);
    zbar.swap(zbar_new);
    r.swap(r_new);
    fz = f_new;
  }
}

void SolverConfig::validate() const {
  if (!(fpr_tol > 0.0) || !(constraint_tol > 0.0))
    throw std::invalid_argument("solver: tolerances must be positive");
  if (q_schedule.empty()) throw std::invalid_argument("solver: empty penalty schedule");
  for (std::size_t i = 0; i < q_schedule.size(); ++i) {
    if (!(q_schedule[i] > 0.0)) throw std::invalid_argument("solver: penalties must be positive");
    if (i > 0 && !(q_schedule[i] > q_schedule[i - 1]))
      throw std::invalid_argument("solver: penalty schedule must be strictly increasing");
  }
  if (!(time_budget > 0.0)) throw std::invalid_argument("solver: time budget must be positive");
  if (lbfgs_memory == 0) throw std::invalid_argument("solver: lbfgs memory must be positive");
  if (simulated_eval_seconds && !(*simulated_eval_seconds > 0.0))
    throw std::invalid_argument("solver: simulated evaluation cost must be positive");
}

SolverOutput penalty_solve(const PenalizedProblem& problem, const Box& box,
                           const Eigen::VectorXd& z_warm, const SolverConfig& config) {
  SolveBudget budget(config.time_budget, config.simulated_eval_seconds);
  const PanocOptions options{config.fpr_tol, config.max_inner_iters, config.lbfgs_memory};

  SolverOutput out;
  out.z = project_box(z_warm, box);

  for (const double q : config.q_schedule) {
    const ObjectiveFn f = [&problem, q](const Eigen::VectorXd& z, Eigen::VectorXd* g) {
      return g ? problem.value_and_gradient(z, q, *g) : problem.value(z, q);
    };
    const PanocResult inner = panoc_solve(f, box, out.z, options, &budget);

    out.z = inner.z;
    out.fpr_norm = inner.fpr_norm;
    out.status = inner.status;
    out.inner_iters += inner.iterations;
    ++out.outer_iters;

    const Eigen::VectorXd G = problem.constraints(out.z);
    out.infeasibility = G.norm();
    out.infeasibility_max = G.size() ? G.lpNorm<Eigen::Infinity>() : 0.0;
    out.stages.push_back({q, out.z, inner.fpr_norm, out.infeasibility,
                          out.infeasibility_max, inner.iterations, inner.status});

    if (inner.status == SolverStatus::kNotFinite) break;
    if (config.early_exit && out.infeasibility_max <= config.constraint_tol) break;
    if (budget.exhausted()) break;
  }

  out.elapsed = budget.elapsed();
  out.converged = out.status == SolverStatus::kConverged;
  out.feasible = out.infeasibility_max <= config.constraint_tol;
  return out;
}

Eigen::VectorXd warm_start_shift(const Eigen::VectorXd& previous, std::size_t input_dim) {
  const auto m = static_cast<Eigen::Index>(input_dim);
  if (previous.size() < m || previous.size() % m != 0)
    throw std::invalid_argument("warm_start_shift: length is not a multiple of the input size");
  Eigen::VectorXd shifted(previous.size());
  const Eigen::Index tail = previous.size() - m;
  shifted.head(tail) = previous.tail(tail);
  shifted.tail(m) = previous.tail(m);
  return shifted;
}

RecedingHorizonSolver::RecedingHorizonSolver(BoxBounds bounds, SolverConfig config,
                                             std::size_t horizon)
    : config_(std::move(config)), horizon_(horizon), box_(bounds.replicate(horizon)) {
  bounds.validate();
  config_.validate();
}

SolverOutput RecedingHorizonSolver::solve(const PenalizedProblem& problem,
                                          const InputVector& steady_input) {
  const Eigen::VectorXd z0 =
      previous_ ? warm_start_shift(*previous_)
                : Eigen::VectorXd(steady_input.replicate(static_cast<Eigen::Index>(horizon_), 1));
  SolverOutput out = penalty_solve(problem, box_, z0, config_);
  previous_ = out.z;
  return out;
}

}  // namespace reactnav
