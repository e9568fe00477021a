#include "reactnav/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reactnav {

UavState UavState::hover_at(const Vector3& position) {
  UavState s;
  s.p = position;
  return s;
}

UavState UavState::from_vector(const StateVector& x) {
  UavState s;
  s.p = x.segment<3>(0);
  s.v = x.segment<3>(3);
  s.phi = x(6);
  s.theta = x(7);
  return s;
}

StateVector UavState::to_vector() const {
  StateVector x;
  x << p, v, phi, theta;
  return x;
}

bool UavState::is_finite() const {
  return p.allFinite() && v.allFinite() && std::isfinite(phi) &&
         std::isfinite(theta);
}

ControlInput ControlInput::from_vector(const InputVector& u) {
  return {u(0), u(1), u(2)};
}

InputVector ControlInput::to_vector() const {
  return {thrust, phi_ref, theta_ref};
}

void ModelParams::validate() const {
  if (!(g > 0.0)) throw std::invalid_argument("model: g must be positive");
  if (!(tau_phi > 0.0) || !(tau_theta > 0.0))
    throw std::invalid_argument("model: attitude time constants must be positive");
  if (!(ts > 0.0)) throw std::invalid_argument("model: sampling time must be positive");
  if (!(thrust_constant > 0.0))
    throw std::invalid_argument("model: thrust constant must be positive");
  if ((damping.array() < 0.0).any())
    throw std::invalid_argument("model: damping must be non-negative");
}

StateVector continuous_dynamics(const StateVector& x, const InputVector& u,
                                const ModelParams& params) {
  const double cphi = std::cos(x(6));
  const double sphi = std::sin(x(6));
  const double cth = std::cos(x(7));
  const double sth = std::sin(x(7));
  const double thrust = u(0);

  // Zero-yaw ZYX rotation applied to (0, 0, T).
  StateVector dx;
  dx.segment<3>(0) = x.segment<3>(3);
  dx(3) = thrust * cphi * sth - params.damping(0) * x(3);
  dx(4) = -thrust * sphi - params.damping(1) * x(4);
  dx(5) = thrust * cphi * cth - params.g - params.damping(2) * x(5);
  dx(6) = (params.k_phi * u(1) - x(6)) / params.tau_phi;
  dx(7) = (params.k_theta * u(2) - x(7)) / params.tau_theta;
  return dx;
}

UavState continuous_dynamics(const UavState& x, const ControlInput& u,
                             const ModelParams& params) {
  return UavState::from_vector(
      continuous_dynamics(x.to_vector(), u.to_vector(), params));
}

StateVector predict_step(const StateVector& x, const InputVector& u,
                         const ModelParams& params) {
  return x + params.ts * continuous_dynamics(x, u, params);
}

UavState predict_step(const UavState& x, const ControlInput& u,
                      const ModelParams& params) {
  return UavState::from_vector(predict_step(x.to_vector(), u.to_vector(), params));
}

std::vector<UavState> rollout(const UavState& x0,
                              std::span<const ControlInput> u_seq,
                              const ModelParams& params) {
  std::vector<UavState> states;
  states.reserve(u_seq.size() + 1);
  states.push_back(x0);
  StateVector x = x0.to_vector();
  for (const ControlInput& u : u_seq) {
    x = predict_step(x, u.to_vector(), params);
    states.push_back(UavState::from_vector(x));
  }
  return states;
}

StateVector simulate_plant(const StateVector& x, const InputVector& u,
                           const ModelParams& params, double dt) {
  if (!(dt > 0.0) || dt > params.ts + 1e-12)
    throw std::invalid_argument("simulate_plant: dt must lie in (0, Ts]");
  const StateVector k1 = continuous_dynamics(x, u, params);
  const StateVector k2 = continuous_dynamics(x + 0.5 * dt * k1, u, params);
  const StateVector k3 = continuous_dynamics(x + 0.5 * dt * k2, u, params);
  const StateVector k4 = continuous_dynamics(x + dt * k3, u, params);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

UavState simulate_plant(const UavState& x, const ControlInput& u,
                        const ModelParams& params, double dt) {
  return UavState::from_vector(
      simulate_plant(x.to_vector(), u.to_vector(), params, dt));
}

double thrust_to_command(double thrust, double thrust_constant) {
  if (!(thrust_constant > 0.0))
    throw std::invalid_argument("thrust_to_command: thrust constant must be positive");
  if (thrust <= 0.0) return 0.0;
  return std::clamp(std::sqrt(thrust / thrust_constant), 0.0, 1.0);
}

}  // namespace reactnav
