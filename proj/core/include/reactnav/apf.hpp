#pragma once

#include <Eigen/Core>
#include <span>
#include <string_view>

#include "reactnav/model.hpp"

namespace reactnav {

struct ApfConfig {
  double l_a = 1.0;
  Vector2 l_r{0.08, 0.16};
  double l_offset = 0.04;
  double l_s = 1.5;
  double r_f = 0.75;
  double r_s = 0.4;
  double f_max = 6.0;
  double df_max = 0.5;

  void validate() const;
};

enum class ApfMode { kBaseline, kEnhanced };

std::string_view to_string(ApfMode mode);

struct ForceState {
  Vector2 f_r_prev = Vector2::Zero();
};

/// Linear falloff per point within r_F plus a constant push L_offset.
Vector2 repulsive_baseline(std::span<const Vector2> points, const ApfConfig& cfg);
/// Quadratic falloff within r_F plus L_s per point within r_s.
Vector2 repulsive_enhanced(std::span<const Vector2> points, const ApfConfig& cfg);

/// Caps |F_r| at F_max and |F_r - F_r_prev| at dF_max (both by rescaling,
/// direction preserved), clips F_a and the sum to unit length, and stores
/// the capped F_r in `state`.
Vector2 force_step(const Vector2& f_a, const Vector2& f_r, ForceState& state,
                   const ApfConfig& cfg);

struct ApfOutput {
  Vector3 setpoint = Vector3::Zero();
  Vector2 f_a = Vector2::Zero();
  Vector2 f_r = Vector2::Zero();  ///< after capping (enhanced) or raw (baseline)
  Vector2 total = Vector2::Zero();
};

/// Shifted way-point p_hat + F in the horizontal plane; altitude follows p_ref.
/// `points` are body-frame LiDAR points; with zero yaw they share world axes.
ApfOutput apf_setpoint(const Vector3& p_ref, const Vector3& p_hat,
                       std::span<const Vector2> points, ApfMode mode, ForceState& state,
                       const ApfConfig& cfg);

}  // namespace reactnav
