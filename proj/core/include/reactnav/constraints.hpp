#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

#include "reactnav/model.hpp"

namespace reactnav {

/// [h]_+ = max(0, h).
inline double plus(double h) { return h > 0.0 ? h : 0.0; }

/// Circle with its safety distance already added to the radius.
struct CircleObstacle {
  Vector2 center = Vector2::Zero();
  double radius = 1.0;

  /// Placeholder used for unused parameter slots.
  static CircleObstacle filler();
  bool is_filler() const;
};

struct LineSegment {
  Vector2 p1 = Vector2::Zero();
  Vector2 p2 = Vector2::Zero();

  double length() const { return (p2 - p1).norm(); }
};

/// Line n.p + c with unit normal n.
struct HalfPlane {
  Vector2 normal = Vector2::UnitX();
  double offset = 0.0;

  double depth(const Vector2& p) const { return normal.dot(p) + offset; }
};

/// Slope-intercept view of a rectangle, `m p_x - p_y + b` per line.
/// Slopes are +-inf for vertical lines.
struct RectSlopeForm {
  double m_par = 0.0;
  double b_par1 = 0.0;
  double b_par2 = 0.0;
  double m_perp = 0.0;
  double b_perp1 = 0.0;
  double b_perp2 = 0.0;
};

/// Rectangle as the intersection of four half-planes; each line is kept in
/// unit-normal form so vertical walls need no special casing.
///
/// The residual is precond * prod_k [depth_k(p)]_+, where each depth is the
/// signed distance to a side, positive on the inside. The four sides come in
/// two antiparallel pairs: sides[0]/[1] run parallel to the source segment,
/// sides[2]/[3] are perpendicular to it.
struct RectObstacle {
  std::array<HalfPlane, 4> sides{};
  double precond = 1.0;

  static RectObstacle filler();
  bool is_filler() const;

  /// Compact parameters (n_x, n_y, c_par1, c_par2, c_perp1, c_perp2) where
  /// (n_x, n_y) is the parallel-side normal and the perpendicular normal is
  /// its +90 degree rotation.
  std::array<double, 6> params() const;
  static RectObstacle from_params(const std::array<double, 6>& xi, double precond = 1.0);

  RectSlopeForm slope_form() const;
  bool contains(const Vector2& p) const;
};

struct RateBounds {
  double dphi_max = 0.08;
  double dtheta_max = 0.08;

  void validate() const;
};

/// Number of constraint slots per predicted position.
struct ObstacleCapacity {
  std::size_t circles = 5;
  std::size_t rects = 10;
};

double h_circle(const Vector2& p, const CircleObstacle& obs);
Vector2 h_circle_gradient(const Vector2& p, const CircleObstacle& obs);

/// Throws std::invalid_argument for segments shorter than 1e-6 m or d_s < 0.
RectObstacle rect_from_segment(const LineSegment& seg, double d_s);

double h_rect(const Vector2& p, const RectObstacle& obs);
Vector2 h_rect_gradient(const Vector2& p, const RectObstacle& obs);

/// Per transition (u_prev -> u0, u0 -> u1, ...) four residuals:
/// [dphi - max]_+, [-dphi - max]_+, [dtheta - max]_+, [-dtheta - max]_+.
Eigen::VectorXd rate_residuals(std::span<const ControlInput> u_seq,
                               const ControlInput& u_prev, const RateBounds& bounds);

/// Length of G for a horizon N and given slot capacity.
std::size_t constraint_dimension(std::size_t horizon, const ObstacleCapacity& capacity);

/// Stacks obstacle residuals at every predicted position j = 0..N, slot by
/// slot (circles then rectangles), followed by the rate residuals. Unused
/// slots contribute exact zeros. Throws std::length_error when more
/// obstacles than slots are supplied.
Eigen::VectorXd assemble_G(std::span<const ControlInput> u_seq, const UavState& x0,
                           const ControlInput& u_prev,
                           std::span<const CircleObstacle> circles,
                           std::span<const RectObstacle> rects,
                           const RateBounds& bounds, const ModelParams& params,
                           const ObstacleCapacity& capacity = {});

}  // namespace reactnav
