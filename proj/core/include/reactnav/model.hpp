#pragma once

#include <Eigen/Core>
#include <cmath>
#include <span>
#include <vector>

namespace reactnav {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using StateVector = Eigen::Matrix<double, 8, 1>;
using InputVector = Eigen::Vector3d;

/// Vehicle state in the yaw-compensated world frame.
///
/// Vector layout is (px, py, pz, vx, vy, vz, phi, theta).
struct UavState {
  Vector3 p = Vector3::Zero();
  Vector3 v = Vector3::Zero();
  double phi = 0.0;
  double theta = 0.0;

  static UavState hover_at(const Vector3& position);
  static UavState from_vector(const StateVector& x);
  StateVector to_vector() const;
  bool is_finite() const;
};

/// Mass-normalized thrust (m/s^2) and attitude references (rad).
struct ControlInput {
  double thrust = 0.0;
  double phi_ref = 0.0;
  double theta_ref = 0.0;

  static ControlInput from_vector(const InputVector& u);
  InputVector to_vector() const;
};

struct ModelParams {
  double g = 9.81;
  Vector3 damping{0.1, 0.1, 0.2};
  double k_phi = 1.0;
  double k_theta = 1.0;
  double tau_phi = 0.23;
  double tau_theta = 0.25;
  double thrust_constant = std::sqrt(9.81) / 0.48;
  double ts = 0.05;

  /// Throws std::invalid_argument on non-positive time constants, Ts or g.
  void validate() const;
  /// Steady-state hover input (g, 0, 0).
  ControlInput hover_input() const { return {g, 0.0, 0.0}; }
};

StateVector continuous_dynamics(const StateVector& x, const InputVector& u,
                                const ModelParams& params);
UavState continuous_dynamics(const UavState& x, const ControlInput& u,
                             const ModelParams& params);

/// One forward-Euler step of length params.ts. This is the NMPC prediction map.
StateVector predict_step(const StateVector& x, const InputVector& u,
                         const ModelParams& params);
UavState predict_step(const UavState& x, const ControlInput& u,
                      const ModelParams& params);

/// Single-shooting rollout: returns N+1 states starting with x0.
std::vector<UavState> rollout(const UavState& x0,
                              std::span<const ControlInput> u_seq,
                              const ModelParams& params);

/// Classic RK4 step of the continuous dynamics over dt (0 < dt <= ts).
StateVector simulate_plant(const StateVector& x, const InputVector& u,
                           const ModelParams& params, double dt);
UavState simulate_plant(const UavState& x, const ControlInput& u,
                        const ModelParams& params, double dt);

/// Normalized motor command u_t in [0, 1] for T_ref = C u_t^2.
double thrust_to_command(double thrust, double thrust_constant);

}  // namespace reactnav
