#include "reactnav/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace reactnav {

void CostWeights::validate() const {
  auto nonneg = [](const auto& w) {
    return std::all_of(w.begin(), w.end(), [](double v) { return v >= 0.0; });
  };
  if (!nonneg(qx) || !nonneg(qu) || !nonneg(qdu))
    throw std::invalid_argument("cost weights must be non-negative");
}

References References::setpoint(const Vector3& position, const ModelParams& params) {
  References refs;
  refs.x_ref.setZero();
  refs.x_ref.head<3>() = position;
  refs.u_ref = params.hover_input().to_vector();
  return refs;
}

void HorizonConfig::validate() const {
  if (n < 1) throw std::invalid_argument("horizon: N must be >= 1");
  if (!(ts > 0.0)) throw std::invalid_argument("horizon: Ts must be positive");
}

std::size_t ParameterVector::flat_size(const ObstacleCapacity& capacity) {
  return 8 + 8 + 3 + 3 + 3 * capacity.circles + kRectParams * capacity.rects;
}

Eigen::VectorXd ParameterVector::to_flat() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(flat_size(capacity())));
  Eigen::Index k = 0;
  flat.segment<8>(k) = x_hat.to_vector();
  k += 8;
  flat.segment<8>(k) = refs.x_ref;
  k += 8;
  flat.segment<3>(k) = refs.u_ref;
  k += 3;
  flat.segment<3>(k) = u_prev.to_vector();
  k += 3;
  for (const CircleObstacle& c : circles) {
    flat(k++) = c.center.x();
    flat(k++) = c.center.y();
    flat(k++) = c.radius;
  }
  for (const RectObstacle& r : rects) {
    for (double v : r.params()) flat(k++) = v;
    flat(k++) = r.precond;
  }
  return flat;
}

ParameterVector ParameterVector::from_flat(const Eigen::VectorXd& flat,
                                           const ObstacleCapacity& capacity) {
  if (static_cast<std::size_t>(flat.size()) != flat_size(capacity))
    throw std::invalid_argument("ParameterVector::from_flat: length does not match capacity");
  ParameterVector rho;
  Eigen::Index k = 0;
  rho.x_hat = UavState::from_vector(flat.segment<8>(k));
  k += 8;
  rho.refs.x_ref = flat.segment<8>(k);
  k += 8;
  rho.refs.u_ref = flat.segment<3>(k);
  k += 3;
  rho.u_prev = ControlInput::from_vector(flat.segment<3>(k));
  k += 3;
  rho.circles.resize(capacity.circles);
  for (CircleObstacle& c : rho.circles) {
    c.center = Vector2(flat(k), flat(k + 1));
    c.radius = flat(k + 2);
    k += 3;
  }
  rho.rects.resize(capacity.rects);
  for (RectObstacle& r : rho.rects) {
    std::array<double, 6> xi{};
    for (double& v : xi) v = flat(k++);
    r = RectObstacle::from_params(xi, flat(k++));
  }
  return rho;
}

std::vector<CircleObstacle> ParameterVector::retained_circles() const {
  std::vector<CircleObstacle> out;
  for (const CircleObstacle& c : circles)
    if (!c.is_filler()) out.push_back(c);
  return out;
}

std::vector<RectObstacle> ParameterVector::retained_rects() const {
  std::vector<RectObstacle> out;
  for (const RectObstacle& r : rects)
    if (!r.is_filler()) out.push_back(r);
  return out;
}

double distance_to(const Vector2& p, const CircleObstacle& c) {
  return std::max(0.0, (p - c.center).norm() - c.radius);
}

double distance_to(const Vector2& p, const LineSegment& s) {
  const Vector2 axis = s.p2 - s.p1;
  const double len2 = axis.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - s.p1).dot(axis) / len2, 0.0, 1.0) : 0.0;
  return (p - (s.p1 + t * axis)).norm();
}

ParameterVector pack_rho(const UavState& x_hat, const References& refs,
                         const ControlInput& u_prev, const ObstacleSet& detected,
                         const PackingConfig& config) {
  const Vector2 p = x_hat.p.head<2>();
  ParameterVector rho;
  rho.x_hat = x_hat;
  rho.refs = refs;
  rho.u_prev = u_prev;

  std::vector<std::pair<double, CircleObstacle>> circles;
  for (const CircleObstacle& c : detected.circles) {
    const double d = distance_to(p, c);
    if (d <= config.consider_radius) circles.emplace_back(d, c);
  }
  std::stable_sort(circles.begin(), circles.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::pair<double, LineSegment>> segments;
  for (const LineSegment& s : detected.segments) {
    if (s.length() < 1e-6) continue;
    const double d = distance_to(p, s);
    if (d <= config.consider_radius) segments.emplace_back(d, s);
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const ObstacleCapacity& cap = config.capacity;
  rho.circles.assign(cap.circles, CircleObstacle::filler());
  rho.rects.assign(cap.rects, RectObstacle::filler());
  for (std::size_t i = 0; i < std::min(cap.circles, circles.size()); ++i)
    rho.circles[i] = circles[i].second;
  for (std::size_t i = 0; i < std::min(cap.rects, segments.size()); ++i)
    rho.rects[i] = rect_from_segment(segments[i].second, config.safety_distance);
  return rho;
}

std::vector<ControlInput> to_inputs(const Eigen::VectorXd& z) {
  if (z.size() % 3 != 0) throw std::invalid_argument("to_inputs: length must be a multiple of 3");
  std::vector<ControlInput> u(static_cast<std::size_t>(z.size() / 3));
  for (std::size_t j = 0; j < u.size(); ++j)
    u[j] = ControlInput::from_vector(z.segment<3>(3 * static_cast<Eigen::Index>(j)));
  return u;
}

Eigen::VectorXd to_decision(std::span<const ControlInput> u_seq) {
  Eigen::VectorXd z(3 * static_cast<Eigen::Index>(u_seq.size()));
  for (std::size_t j = 0; j < u_seq.size(); ++j)
    z.segment<3>(3 * static_cast<Eigen::Index>(j)) = u_seq[j].to_vector();
  return z;
}

NmpcProblem::NmpcProblem(ModelParams model, CostWeights weights, HorizonConfig horizon,
                         RateBounds rates, ObstacleCapacity capacity)
    : model_(std::move(model)),
      weights_(weights),
      horizon_(horizon),
      rates_(rates),
      capacity_(capacity) {
  horizon_.validate();
  model_.ts = horizon_.ts;
  model_.validate();
  weights_.validate();
  rates_.validate();
}

NmpcProblem::Bound NmpcProblem::bind(const ParameterVector& rho) const {
  return Bound(*this, rho);
}

void NmpcProblem::check(const Eigen::VectorXd& z, const ParameterVector& rho) const {
  if (static_cast<std::size_t>(z.size()) != dimension())
    throw std::invalid_argument("NmpcProblem: decision vector has wrong length");
  if (rho.circles.size() > capacity_.circles || rho.rects.size() > capacity_.rects)
    throw std::length_error("NmpcProblem: parameter vector exceeds slot capacity");
}

std::vector<UavState> NmpcProblem::predict(const Eigen::VectorXd& z,
                                           const ParameterVector& rho) const {
  check(z, rho);
  const std::vector<ControlInput> u = to_inputs(z);
  return rollout(rho.x_hat, u, model_);
}

double NmpcProblem::cost(const Eigen::VectorXd& z, const ParameterVector& rho) const {
  return evaluate(z, rho, 0.0, nullptr);
}

Eigen::VectorXd NmpcProblem::constraints(const Eigen::VectorXd& z,
                                         const ParameterVector& rho) const {
  check(z, rho);
  const std::vector<ControlInput> u = to_inputs(z);
  return assemble_G(u, rho.x_hat, rho.u_prev, rho.circles, rho.rects, rates_, model_,
                    capacity_);
}

double NmpcProblem::penalized(const Eigen::VectorXd& z, const ParameterVector& rho,
                              double q) const {
  return evaluate(z, rho, q, nullptr);
}

double NmpcProblem::penalized_gradient(const Eigen::VectorXd& z, const ParameterVector& rho,
                                       double q, Eigen::VectorXd& grad) const {
  return evaluate(z, rho, q, &grad);
}

double NmpcProblem::evaluate(const Eigen::VectorXd& z, const ParameterVector& rho, double q,
                             Eigen::VectorXd* grad) const {
  check(z, rho);
  const auto n = static_cast<Eigen::Index>(horizon_.n);
  const ModelParams& m = model_;
  const double ts = m.ts;
  const StateVector& x_ref = rho.refs.x_ref;
  const InputVector& u_ref = rho.refs.u_ref;
  const bool penalize = q != 0.0;

  Eigen::Matrix<double, 8, Eigen::Dynamic> xs(8, n + 1);
  xs.col(0) = rho.x_hat.to_vector();
  for (Eigen::Index j = 0; j < n; ++j)
    xs.col(j + 1) = predict_step(StateVector(xs.col(j)), InputVector(z.segment<3>(3 * j)), m);

  double value = 0.0;
  for (Eigen::Index j = 0; j <= n; ++j) {
    for (int k = 0; k < 8; ++k) {
      const double e = xs(k, j) - x_ref(k);
      value += weights_.qx[k] * e * e;
    }
    if (!penalize) continue;
    const Vector2 p(xs(0, j), xs(1, j));
    for (const CircleObstacle& c : rho.circles) {
      if (c.is_filler()) continue;
      const double h = h_circle(p, c);
      value += q * h * h;
    }
    for (const RectObstacle& r : rho.rects) {
      if (r.is_filler()) continue;
      const double h = h_rect(p, r);
      value += q * h * h;
    }
  }

  const std::array<double, 3> rate_max{0.0, rates_.dphi_max, rates_.dtheta_max};
  InputVector prev = rho.u_prev.to_vector();
  for (Eigen::Index j = 0; j < n; ++j) {
    const InputVector u = z.segment<3>(3 * j);
    for (int a = 0; a < 3; ++a) {
      const double du = u(a) - u_ref(a);
      const double dd = u(a) - prev(a);
      value += weights_.qu[a] * du * du + weights_.qdu[a] * dd * dd;
    }
    if (penalize) {
      for (int a = 1; a < 3; ++a) {
        const double delta = u(a) - prev(a);
        const double up = plus(delta - rate_max[a]);
        const double lo = plus(-delta - rate_max[a]);
        value += q * (up * up + lo * lo);
      }
    }
    prev = u;
  }

  if (!grad) return value;

  Eigen::VectorXd& g = *grad;
  g.setZero(3 * n);

  prev = rho.u_prev.to_vector();
  for (Eigen::Index j = 0; j < n; ++j) {
    const InputVector u = z.segment<3>(3 * j);
    for (int a = 0; a < 3; ++a) {
      const double dd = 2.0 * weights_.qdu[a] * (u(a) - prev(a));
      g(3 * j + a) += 2.0 * weights_.qu[a] * (u(a) - u_ref(a)) + dd;
      if (j > 0) g(3 * (j - 1) + a) -= dd;
    }
    if (penalize) {
      for (int a = 1; a < 3; ++a) {
        const double delta = u(a) - prev(a);
        const double c =
            2.0 * q * (plus(delta - rate_max[a]) - plus(-delta - rate_max[a]));
        g(3 * j + a) += c;
        if (j > 0) g(3 * (j - 1) + a) -= c;
      }
    }
    prev = u;
  }

  // d(stage cost at x_j)/d x_j
  auto stage_gradient = [&](Eigen::Index j) {
    StateVector s;
    for (int k = 0; k < 8; ++k) s(k) = 2.0 * weights_.qx[k] * (xs(k, j) - x_ref(k));
    if (penalize) {
      const Vector2 p(xs(0, j), xs(1, j));
      Vector2 gp = Vector2::Zero();
      for (const CircleObstacle& c : rho.circles) {
        if (c.is_filler()) continue;
        const double h = h_circle(p, c);
        if (h > 0.0) gp += 2.0 * q * h * h_circle_gradient(p, c);
      }
      for (const RectObstacle& r : rho.rects) {
        if (r.is_filler()) continue;
        const double h = h_rect(p, r);
        if (h > 0.0) gp += 2.0 * q * h * h_rect_gradient(p, r);
      }
      s.head<2>() += gp;
    }
    return s;
  };

  StateVector lambda = stage_gradient(n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const double cphi = std::cos(xs(6, j));
    const double sphi = std::sin(xs(6, j));
    const double cth = std::cos(xs(7, j));
    const double sth = std::sin(xs(7, j));
    const double thrust = z(3 * j);

    g(3 * j + 0) += ts * (lambda(3) * cphi * sth - lambda(4) * sphi + lambda(5) * cphi * cth);
    g(3 * j + 1) += ts * lambda(6) * m.k_phi / m.tau_phi;
    g(3 * j + 2) += ts * lambda(7) * m.k_theta / m.tau_theta;
    if (j == 0) break;

    StateVector next;
    next.head<3>() = lambda.head<3>();
    for (int i = 0; i < 3; ++i)
      next(3 + i) = lambda(3 + i) + ts * (lambda(i) - m.damping(i) * lambda(3 + i));
    const double dv_dphi = thrust * (-sphi * sth * lambda(3) - cphi * lambda(4) -
                                     sphi * cth * lambda(5));
    const double dv_dtheta = thrust * (cphi * cth * lambda(3) - cphi * sth * lambda(5));
    next(6) = lambda(6) + ts * (dv_dphi - lambda(6) / m.tau_phi);
    next(7) = lambda(7) + ts * (dv_dtheta - lambda(7) / m.tau_theta);
    lambda = next + stage_gradient(j);
  }
  return value;
}

}  // namespace reactnav
