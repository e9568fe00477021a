#include "reactnav/apf.hpp"

#include <stdexcept>

namespace reactnav {
namespace {

Vector2 clip_norm(const Vector2& f, double cap) {
  const double n = f.norm();
  return n > cap ? Vector2(f * (cap / n)) : f;
}

}  // namespace

void ApfConfig::validate() const {
  if (l_a < 0.0 || (l_r.array() < 0.0).any() || l_offset < 0.0 || l_s < 0.0)
    throw std::invalid_argument("apf: gains must be non-negative");
  if (!(r_s > 0.0) || !(r_s < r_f)) throw std::invalid_argument("apf: need 0 < r_s < r_F");
  if (!(f_max > 0.0) || !(df_max > 0.0))
    throw std::invalid_argument("apf: force caps must be positive");
}

std::string_view to_string(ApfMode mode) {
  return mode == ApfMode::kBaseline ? "apf-baseline" : "apf-enhanced";
}

Vector2 repulsive_baseline(std::span<const Vector2> points, const ApfConfig& cfg) {
  Vector2 f = Vector2::Zero();
  for (const Vector2& p : points) {
    const double d = p.norm();
    if (d == 0.0 || d > cfg.r_f) continue;
    const Vector2 away = -p / d;
    f += (cfg.l_r * (1.0 - d / cfg.r_f)).cwiseProduct(away) + cfg.l_offset * away;
  }
  return f;
}

Vector2 repulsive_enhanced(std::span<const Vector2> points, const ApfConfig& cfg) {
  Vector2 f = Vector2::Zero();
  for (const Vector2& p : points) {
    const double d = p.norm();
    if (d == 0.0 || d > cfg.r_f) continue;
    const Vector2 away = -p / d;
    const double falloff = 1.0 - d / cfg.r_f;
    f += (cfg.l_r * falloff * falloff).cwiseProduct(away);
    if (d <= cfg.r_s) f += cfg.l_s * away;
  }
  return f;
}

Vector2 force_step(const Vector2& f_a, const Vector2& f_r, ForceState& state,
                   const ApfConfig& cfg) {
  Vector2 rep = clip_norm(f_r, cfg.f_max);
  const Vector2 change = rep - state.f_r_prev;
  if (change.norm() > cfg.df_max) rep = state.f_r_prev + change * (cfg.df_max / change.norm());
  state.f_r_prev = rep;
  return clip_norm(rep + clip_norm(f_a, 1.0), 1.0);
}

ApfOutput apf_setpoint(const Vector3& p_ref, const Vector3& p_hat,
                       std::span<const Vector2> points, ApfMode mode, ForceState& state,
                       const ApfConfig& cfg) {
  ApfOutput out;
  out.f_a = cfg.l_a * (p_ref - p_hat).head<2>();
  if (mode == ApfMode::kBaseline) {
    out.f_r = repulsive_baseline(points, cfg);
    out.total = out.f_a + out.f_r;
  } else {
    out.total = force_step(out.f_a, repulsive_enhanced(points, cfg), state, cfg);
    out.f_r = state.f_r_prev;
  }
  out.setpoint << p_hat.head<2>() + out.total, p_ref.z();
  return out;
}

}  // namespace reactnav
