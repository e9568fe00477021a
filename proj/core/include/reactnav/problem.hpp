#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

#include "reactnav/constraints.hpp"
#include "reactnav/model.hpp"
#include "reactnav/solver.hpp"

namespace reactnav {

/// Diagonal weights of the tracking cost.
struct CostWeights {
  std::array<double, 8> qx{2, 2, 40, 5, 5, 5, 8, 8};
  std::array<double, 3> qu{5, 10, 10};
  std::array<double, 3> qdu{10, 20, 20};

  void validate() const;
};

struct References {
  StateVector x_ref = StateVector::Zero();
  InputVector u_ref{9.81, 0.0, 0.0};

  /// Position set-point with zero velocity/attitude and hover input.
  static References setpoint(const Vector3& position, const ModelParams& params);
};

struct HorizonConfig {
  std::size_t n = 40;
  double ts = 0.05;

  void validate() const;
};

/// Circles and line segments as reported by perception, circles already inflated.
struct ObstacleSet {
  std::vector<CircleObstacle> circles;
  std::vector<LineSegment> segments;

  bool empty() const { return circles.empty() && segments.empty(); }
};

/// NMPC parameter vector. Obstacle lists always hold exactly the slot
/// capacity; unused slots carry the far-away filler.
struct ParameterVector {
  UavState x_hat;
  References refs;
  ControlInput u_prev;
  std::vector<CircleObstacle> circles;
  std::vector<RectObstacle> rects;

  static constexpr std::size_t kRectParams = 7;  // six line constants + precond

  static std::size_t flat_size(const ObstacleCapacity& capacity);
  ObstacleCapacity capacity() const { return {circles.size(), rects.size()}; }

  /// Layout: x_hat(8) x_ref(8) u_ref(3) u_prev(3) circles(3 Nc) rects(7 Nr).
  Eigen::VectorXd to_flat() const;
  static ParameterVector from_flat(const Eigen::VectorXd& flat, const ObstacleCapacity& capacity);

  std::vector<CircleObstacle> retained_circles() const;
  std::vector<RectObstacle> retained_rects() const;
};

struct PackingConfig {
  ObstacleCapacity capacity{};
  double safety_distance = 0.4;
  double consider_radius = 3.0;
};

/// Builds the parameter vector: obstacles farther than consider_radius from
/// the vehicle are dropped, the rest sorted by distance and truncated to the
/// slot capacity. Segments become rectangles inflated by the safety distance.
ParameterVector pack_rho(const UavState& x_hat, const References& refs,
                         const ControlInput& u_prev, const ObstacleSet& detected,
                         const PackingConfig& config);

/// Planar distance from p to the obstacle boundary (0 when inside).
double distance_to(const Vector2& p, const CircleObstacle& c);
double distance_to(const Vector2& p, const LineSegment& s);

std::vector<ControlInput> to_inputs(const Eigen::VectorXd& z);
Eigen::VectorXd to_decision(std::span<const ControlInput> u_seq);

/// Single-shooting NMPC formulation over the stacked input sequence z (3N).
///
/// The objective is J(z; rho) + q ||G(z; rho)||^2, with J the weighted state,
/// input and input-change cost and G the obstacle and rate residuals.
class NmpcProblem {
 public:
  NmpcProblem(ModelParams model, CostWeights weights, HorizonConfig horizon,
              RateBounds rates, ObstacleCapacity capacity);

  std::size_t horizon() const { return horizon_.n; }
  std::size_t dimension() const { return 3 * horizon_.n; }
  const ModelParams& model() const { return model_; }
  const CostWeights& weights() const { return weights_; }
  const RateBounds& rates() const { return rates_; }
  const ObstacleCapacity& capacity() const { return capacity_; }

  double cost(const Eigen::VectorXd& z, const ParameterVector& rho) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& z, const ParameterVector& rho) const;
  double penalized(const Eigen::VectorXd& z, const ParameterVector& rho, double q) const;
  /// Exact gradient through the Euler rollout (reverse accumulation).
  double penalized_gradient(const Eigen::VectorXd& z, const ParameterVector& rho, double q,
                            Eigen::VectorXd& grad) const;

  std::vector<UavState> predict(const Eigen::VectorXd& z, const ParameterVector& rho) const;

  class Bound;
  /// Binds a parameter vector; the result references both this and rho.
  Bound bind(const ParameterVector& rho) const;

 private:
  double evaluate(const Eigen::VectorXd& z, const ParameterVector& rho, double q,
                  Eigen::VectorXd* grad) const;
  void check(const Eigen::VectorXd& z, const ParameterVector& rho) const;

  ModelParams model_;
  CostWeights weights_;
  HorizonConfig horizon_;
  RateBounds rates_;
  ObstacleCapacity capacity_;
};

class NmpcProblem::Bound final : public PenalizedProblem {
 public:
  Bound(const NmpcProblem& problem, const ParameterVector& rho)
      : problem_(&problem), rho_(&rho) {}

  std::size_t dimension() const override { return problem_->dimension(); }
  double value(const Eigen::VectorXd& z, double q) const override {
    return problem_->penalized(z, *rho_, q);
  }
  double value_and_gradient(const Eigen::VectorXd& z, double q,
                            Eigen::VectorXd& grad) const override {
    return problem_->penalized_gradient(z, *rho_, q, grad);
  }
  Eigen::VectorXd constraints(const Eigen::VectorXd& z) const override {
    return problem_->constraints(z, *rho_);
  }

 private:
  const NmpcProblem* problem_;
  const ParameterVector* rho_;
};

}  // namespace reactnav
