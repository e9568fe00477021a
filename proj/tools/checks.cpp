#include "checks.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "reactnav/apf.hpp"
#include "reactnav/perception.hpp"
#include "reactnav/problem.hpp"
#include "reactnav/solver.hpp"

namespace reactnav::tools {
namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

struct ToyProblem {
  NmpcProblem problem;
  ParameterVector rho;
  Box box;
};

ToyProblem make_toy(std::size_t n) {
  const ModelParams model;
  const ObstacleCapacity capacity{1, 1};
  NmpcProblem problem(model, CostWeights{}, HorizonConfig{n, 0.05}, RateBounds{}, capacity);
  ObstacleSet obstacles;
  obstacles.circles.push_back({Vector2(0.6, 0.05), 0.5});
  obstacles.segments.push_back({Vector2(0.3, -0.6), Vector2(0.3, 0.6)});
  UavState x0 = UavState::hover_at(Vector3(0.0, 0.0, 1.0));
  x0.v = Vector3(1.0, 0.1, 0.0);
  ParameterVector rho = pack_rho(x0, References::setpoint(Vector3(3.0, 0.0, 1.0), model),
                                 model.hover_input(), obstacles, {capacity, 0.2, 10.0});
  return {std::move(problem), std::move(rho), BoxBounds{}.replicate(n)};
}

CheckResult gradient_check() {
  ToyProblem toy = make_toy(5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd z(toy.problem.dimension());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z(i) = toy.box.lower(i) + unit(rng) * (toy.box.upper(i) - toy.box.lower(i));
    Eigen::VectorXd g;
    toy.problem.penalized_gradient(z, toy.rho, 1e3, g);
    Eigen::VectorXd fd(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += 1e-6;
      zm(i) -= 1e-6;
      fd(i) = (toy.problem.penalized(zp, toy.rho, 1e3) - toy.problem.penalized(zm, toy.rho, 1e3)) /
              2e-6;
    }
    worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
  }
  return {"gradient matches central differences", worst <= 1e-5, "max rel err " + fmt(worst)};
}

CheckResult box_and_fbe_check() {
  ToyProblem toy = make_toy(10);
  const auto bound = toy.problem.bind(toy.rho);
  const ObjectiveFn f = [&](const Eigen::VectorXd& z, Eigen::VectorXd* g) {
    return g ? bound.value_and_gradient(z, 1e3, *g) : bound.value(z, 1e3);
  };
  bool monotone = true;
  bool feasible = true;
  const PanocObserver watch = [&](const PanocStep& step) {
    if (step.fbe_after > step.fbe_before + 1e-9 * (1.0 + std::abs(step.fbe_before)))
      monotone = false;
  };
  Eigen::VectorXd z0 = Eigen::VectorXd::Constant(toy.problem.dimension(), 20.0);
  const PanocResult res = panoc_solve(f, toy.box, z0, PanocOptions{}, nullptr, watch);
  feasible = toy.box.contains(res.z);
  return {"PANOC iterate in box, envelope non-increasing", monotone && feasible,
          std::string(to_string(res.status)) + ", fpr " + fmt(res.fpr_norm)};
}

CheckResult apf_caps_check() {
  ApfConfig cfg;
  ForceState state;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 5.0);
  double worst_total = 0.0;
  double worst_rate = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector2 prev = state.f_r_prev;
    const Vector2 total = force_step(Vector2(n(rng), n(rng)), Vector2(n(rng), n(rng)), state, cfg);
    worst_total = std::max(worst_total, total.norm());
    worst_rate = std::max(worst_rate, (state.f_r_prev - prev).norm());
  }
  const bool ok = worst_total <= 1.0 + 1e-12 && worst_rate <= cfg.df_max + 1e-12;
  return {"APF force and rate caps", ok, "|F| " + fmt(worst_total) + ", |dFr| " + fmt(worst_rate)};
}

CheckResult hover_check() {
  const ModelParams model;
  const UavState x = UavState::hover_at(Vector3(1.0, -2.0, 1.5));
  const UavState next = predict_step(x, model.hover_input(), model);
  const double err = (next.to_vector() - x.to_vector()).norm();
  return {"hover is a fixed point", err <= 1e-12, "step error " + fmt(err)};
}

CheckResult determinism_check() {
  Scene scene;
  scene.circles.push_back({Vector2(2.0, 0.0), 0.3});
  scene.segments.push_back({Vector2(-1.0, 1.5), Vector2(3.0, 1.5)});
  std::mt19937_64 a(11), b(11);
  const Scan sa = raycast(scene, Pose2{}, LidarSpec{}, a);
  const Scan sb = raycast(scene, Pose2{}, LidarSpec{}, b);

  ToyProblem toy = make_toy(10);
  SolverConfig cfg;
  cfg.simulated_eval_seconds = 1e-4;
  const auto bound = toy.problem.bind(toy.rho);
  const Eigen::VectorXd z0 = Eigen::VectorXd::Constant(toy.problem.dimension(), 9.81);
  const SolverOutput r1 = penalty_solve(bound, toy.box, z0, cfg);
  const SolverOutput r2 = penalty_solve(bound, toy.box, z0, cfg);
  const bool ok = sa.ranges == sb.ranges && r1.z == r2.z;
  return {"seeded scans and budgeted solves repeat exactly", ok, ""};
}

}  // namespace

std::vector<CheckResult> run_property_checks() {
  return {gradient_check(), box_and_fbe_check(), apf_caps_check(), hover_check(),
          determinism_check()};
}

}  // namespace reactnav::tools
