#include "reactnav/constraints.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace reactnav {
namespace {

constexpr double kFillerCoordinate = 1.0e6;
constexpr double kFillerThreshold = 1.0e5;

double slope_of(const Vector2& normal) {
  // Line n.p + c = 0 written as m x - y + b: m = -n_x / n_y.
  if (normal.y() == 0.0) return normal.x() >= 0.0 ? -std::numeric_limits<double>::infinity()
                                                   : std::numeric_limits<double>::infinity();
  return -normal.x() / normal.y();
}

double intercept_of(const HalfPlane& side) {
  if (side.normal.y() == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return side.offset / -side.normal.y();
}

}  // namespace

CircleObstacle CircleObstacle::filler() {
  return {Vector2(kFillerCoordinate, kFillerCoordinate), 1.0};
}

bool CircleObstacle::is_filler() const {
  return center.x() >= kFillerThreshold && center.y() >= kFillerThreshold;
}

RectObstacle RectObstacle::filler() {
  return rect_from_segment({Vector2(kFillerCoordinate, kFillerCoordinate),
                            Vector2(kFillerCoordinate + 1.0, kFillerCoordinate)},
                           1.0);
}

bool RectObstacle::is_filler() const {
  // The far-away filler has every side offset of order 1e6.
  return std::abs(sides[0].offset) >= kFillerThreshold &&
         std::abs(sides[2].offset) >= kFillerThreshold;
}

std::array<double, 6> RectObstacle::params() const {
  return {sides[0].normal.x(), sides[0].normal.y(), sides[0].offset,
          sides[1].offset,     sides[2].offset,     sides[3].offset};
}

RectObstacle RectObstacle::from_params(const std::array<double, 6>& xi, double precond) {
  const Vector2 n_par(xi[0], xi[1]);
  const Vector2 n_perp(-n_par.y(), n_par.x());
  RectObstacle r;
  r.sides[0] = {n_par, xi[2]};
  r.sides[1] = {-n_par, xi[3]};
  r.sides[2] = {n_perp, xi[4]};
  r.sides[3] = {-n_perp, xi[5]};
  r.precond = precond;
  return r;
}

RectSlopeForm RectObstacle::slope_form() const {
  RectSlopeForm f;
  f.m_par = slope_of(sides[0].normal);
  f.b_par1 = intercept_of(sides[0]);
  f.b_par2 = intercept_of(sides[1]);
  f.m_perp = slope_of(sides[2].normal);
  f.b_perp1 = intercept_of(sides[2]);
  f.b_perp2 = intercept_of(sides[3]);
  return f;
}

bool RectObstacle::contains(const Vector2& p) const {
  for (const HalfPlane& s : sides)
    if (s.depth(p) <= 0.0) return false;
  return true;
}

void RateBounds::validate() const {
  if (!(dphi_max > 0.0) || !(dtheta_max > 0.0))
    throw std::invalid_argument("rate bounds must be positive");
}

double h_circle(const Vector2& p, const CircleObstacle& obs) {
  const Vector2 d = p - obs.center;
  return plus(obs.radius * obs.radius - d.squaredNorm());
}

Vector2 h_circle_gradient(const Vector2& p, const CircleObstacle& obs) {
  const Vector2 d = p - obs.center;
  if (obs.radius * obs.radius - d.squaredNorm() <= 0.0) return Vector2::Zero();
  return -2.0 * d;
}

RectObstacle rect_from_segment(const LineSegment& seg, double d_s) {
  if (!(d_s >= 0.0)) throw std::invalid_argument("rect_from_segment: d_s must be >= 0");
  const Vector2 axis = seg.p2 - seg.p1;
  const double length = axis.norm();
  if (!(length >= 1e-6))
    throw std::invalid_argument("rect_from_segment: degenerate segment");
  const Vector2 dir = axis / length;
  const Vector2 n_par(-dir.y(), dir.x());  // left normal of the segment
  // rot90(n_par) == -dir, matching the from_params() convention.
  const Vector2 along(-n_par.y(), n_par.x());

  RectObstacle r;
  // Inside of the lateral band: -d_s < n_par.(p - p1) < d_s.
  r.sides[0] = {n_par, -n_par.dot(seg.p1) + d_s};
  r.sides[1] = {-n_par, n_par.dot(seg.p1) + d_s};
  // Along the axis: -d_s < dir.(p - p1) < length + d_s.
  r.sides[2] = {along, -along.dot(seg.p1) + length + d_s};
  r.sides[3] = {-along, along.dot(seg.p1) + d_s};
  r.precond = 1.0;
  return r;
}

double h_rect(const Vector2& p, const RectObstacle& obs) {
  double prod = obs.precond;
  for (const HalfPlane& s : obs.sides) {
    const double d = s.depth(p);
    if (d <= 0.0) return 0.0;
    prod *= d;
  }
  return prod;
}

Vector2 h_rect_gradient(const Vector2& p, const RectObstacle& obs) {
  std::array<double, 4> d{};
  for (std::size_t k = 0; k < 4; ++k) {
    d[k] = obs.sides[k].depth(p);
    if (d[k] <= 0.0) return Vector2::Zero();
  }
  Vector2 g = Vector2::Zero();
  for (std::size_t k = 0; k < 4; ++k) {
    double others = obs.precond;
    for (std::size_t l = 0; l < 4; ++l)
      if (l != k) others *= d[l];
    g += others * obs.sides[k].normal;
  }
  return g;
}

Eigen::VectorXd rate_residuals(std::span<const ControlInput> u_seq,
                               const ControlInput& u_prev, const RateBounds& bounds) {
  Eigen::VectorXd r(4 * u_seq.size());
  ControlInput prev = u_prev;
  for (std::size_t j = 0; j < u_seq.size(); ++j) {
    const double dphi = u_seq[j].phi_ref - prev.phi_ref;
    const double dtheta = u_seq[j].theta_ref - prev.theta_ref;
    r(4 * j + 0) = plus(dphi - bounds.dphi_max);
    r(4 * j + 1) = plus(-dphi - bounds.dphi_max);
    r(4 * j + 2) = plus(dtheta - bounds.dtheta_max);
    r(4 * j + 3) = plus(-dtheta - bounds.dtheta_max);
    prev = u_seq[j];
  }
  return r;
}

std::size_t constraint_dimension(std::size_t horizon, const ObstacleCapacity& capacity) {
  return (horizon + 1) * (capacity.circles + capacity.rects) + 4 * horizon;
}

Eigen::VectorXd assemble_G(std::span<const ControlInput> u_seq, const UavState& x0,
                           const ControlInput& u_prev,
                           std::span<const CircleObstacle> circles,
                           std::span<const RectObstacle> rects,
                           const RateBounds& bounds, const ModelParams& params,
                           const ObstacleCapacity& capacity) {
  if (circles.size() > capacity.circles || rects.size() > capacity.rects)
    throw std::length_error("assemble_G: more obstacles than constraint slots");

  const std::size_t n = u_seq.size();
  const std::size_t slots = capacity.circles + capacity.rects;
  Eigen::VectorXd G = Eigen::VectorXd::Zero(constraint_dimension(n, capacity));

  const std::vector<UavState> states = rollout(x0, u_seq, params);
  for (std::size_t j = 0; j <= n; ++j) {
    const Vector2 p = states[j].p.head<2>();
    const std::size_t base = j * slots;
    for (std::size_t i = 0; i < circles.size(); ++i) G(base + i) = h_circle(p, circles[i]);
    for (std::size_t i = 0; i < rects.size(); ++i)
      G(base + capacity.circles + i) = h_rect(p, rects[i]);
  }
  G.tail(4 * n) = rate_residuals(u_seq, u_prev, bounds);
  return G;
}

}  // namespace reactnav
