#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "reactnav/apf.hpp"

namespace reactnav {
namespace {

const ApfConfig kCfg;

TEST(RepulsiveBaseline, Examples) {
  EXPECT_EQ(repulsive_baseline(std::vector<Vector2>{}, kCfg), Vector2::Zero());
  EXPECT_EQ(repulsive_baseline(std::vector<Vector2>{{0.8, 0.0}, {0.0, -2.0}}, kCfg),
            Vector2::Zero());

  const Vector2 f = repulsive_baseline(std::vector<Vector2>{{0.5, 0.0}}, kCfg);
  EXPECT_NEAR(f.x(), -(0.08 * (1.0 - 0.5 / 0.75) + 0.04), 1e-15);
  EXPECT_NEAR(f.x(), -0.0667, 1e-4);
  EXPECT_EQ(f.y(), 0.0);

  const Vector2 sym = repulsive_baseline(std::vector<Vector2>{{0.5, 0.0}, {-0.5, 0.0}}, kCfg);
  EXPECT_NEAR(sym.norm(), 0.0, 1e-15);
}

TEST(RepulsiveBaseline, AnisotropicGain) {
  const Vector2 f = repulsive_baseline(std::vector<Vector2>{{0.0, 0.5}}, kCfg);
  EXPECT_NEAR(f.y(), -(0.16 / 3.0 + 0.04), 1e-15);
}

TEST(RepulsiveBaseline, SkipsOriginPoint) {
  EXPECT_EQ(repulsive_baseline(std::vector<Vector2>{{0.0, 0.0}}, kCfg), Vector2::Zero());
  EXPECT_EQ(repulsive_enhanced(std::vector<Vector2>{{0.0, 0.0}}, kCfg), Vector2::Zero());
}

TEST(RepulsiveEnhanced, Examples) {
  EXPECT_EQ(repulsive_enhanced(std::vector<Vector2>{}, kCfg), Vector2::Zero());
  const Vector2 far = repulsive_enhanced(std::vector<Vector2>{{0.5, 0.0}}, kCfg);
  EXPECT_NEAR(far.x(), -0.08 / 9.0, 1e-15);
  EXPECT_NEAR(far.x(), -0.00889, 1e-5);
  const Vector2 near = repulsive_enhanced(std::vector<Vector2>{{0.3, 0.0}}, kCfg);
  EXPECT_NEAR(near.x(), -1.5 - 0.08 * 0.6 * 0.6, 1e-15);
  EXPECT_EQ(near.y(), 0.0);
}

TEST(Repulsive, PointsAwayFromSinglePoint) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int k = 0; k < 500; ++k) {
    const Vector2 p(u(rng), u(rng));
    if (p.norm() > kCfg.r_f || p.norm() < 1e-6) continue;
    const std::vector<Vector2> pts{p};
    EXPECT_LT(repulsive_baseline(pts, kCfg).dot(p), 0.0);
    if (p.norm() < kCfg.r_f - 1e-9 || p.norm() <= kCfg.r_s) {
      EXPECT_LT(repulsive_enhanced(pts, kCfg).dot(p), 0.0);
    }
  }
}

TEST(Repulsive, BaselineContinuousInPointPosition) {
  const Vector2 p(0.3, 0.2);
  const Vector2 f = repulsive_baseline(std::vector<Vector2>{p}, kCfg);
  for (double e : {1e-4, 1e-6, 1e-8}) {
    const Vector2 g = repulsive_baseline(std::vector<Vector2>{p + Vector2(e, -e)}, kCfg);
    EXPECT_LT((g - f).norm(), 10 * e);
  }
}

TEST(ForceStep, Examples) {
  ForceState s;
  EXPECT_EQ(force_step(Vector2(0.3, 0), Vector2::Zero(), s, kCfg), Vector2(0.3, 0));
  s = {};
  EXPECT_EQ(force_step(Vector2(2, 0), Vector2::Zero(), s, kCfg), Vector2(1, 0));

  // Magnitude cap applies before the rate logic.
  s.f_r_prev = Vector2(6, 0);
  force_step(Vector2::Zero(), Vector2(10, 0), s, kCfg);
  EXPECT_EQ(s.f_r_prev, Vector2(6, 0));

  s = {};
  force_step(Vector2::Zero(), Vector2(10, 0), s, kCfg);
  EXPECT_NEAR((s.f_r_prev - Vector2(0.5, 0)).norm(), 0.0, 1e-15);
}

TEST(ForceStep, CapsPreserveDirection) {
  ForceState s;
  s.f_r_prev = Vector2(6.0 * 0.6, 6.0 * 0.8);
  force_step(Vector2::Zero(), Vector2(30, 40), s, kCfg);
  EXPECT_NEAR((s.f_r_prev - Vector2(3.6, 4.8)).norm(), 0.0, 1e-12);
}

TEST(ForceStep, CapsHoldOnRandomSequences) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 4.0);
  ForceState s;
  for (int k = 0; k < 5000; ++k) {
    const Vector2 prev = s.f_r_prev;
    const Vector2 total = force_step(Vector2(n(rng), n(rng)), Vector2(n(rng), n(rng)), s, kCfg);
    EXPECT_LE(total.norm(), 1.0 + 1e-12);
    EXPECT_LE((s.f_r_prev - prev).norm(), kCfg.df_max + 1e-12);
    EXPECT_LE(s.f_r_prev.norm(), kCfg.f_max + 1e-12);
    EXPECT_TRUE(s.f_r_prev.allFinite());
  }
}

TEST(ApfSetpoint, NoObstaclesBaseline) {
  ForceState s;
  const Vector3 p_ref(5, 1, 1.2), p_hat(1, 0.5, 1.0);
  const ApfOutput out = apf_setpoint(p_ref, p_hat, {}, ApfMode::kBaseline, s, kCfg);
  EXPECT_EQ(out.setpoint, Vector3(5, 1, 1.2));
  EXPECT_EQ(out.f_r, Vector2::Zero());
}

TEST(ApfSetpoint, EnhancedNormalizesAttraction) {
  ForceState s;
  const ApfOutput out =
      apf_setpoint(Vector3(5, 0, 1), Vector3(1, 0, 1), {}, ApfMode::kEnhanced, s, kCfg);
  EXPECT_NEAR((out.setpoint - Vector3(2, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(ApfSetpoint, EquilibriumAtReference) {
  for (ApfMode mode : {ApfMode::kBaseline, ApfMode::kEnhanced}) {
    ForceState s;
    const Vector3 p(2, 3, 1);
    EXPECT_EQ(apf_setpoint(p, p, {}, mode, s, kCfg).setpoint, p);
  }
}

TEST(ApfSetpoint, DeflectsAwayFromOffsetObstacle) {
  const std::vector<Vector2> pts{{0.4, 0.05}, {0.45, 0.1}, {0.5, 0.15}};
  for (ApfMode mode : {ApfMode::kBaseline, ApfMode::kEnhanced}) {
    ForceState s;
    const ApfOutput out = apf_setpoint(Vector3(0.5, 0, 1), Vector3(0, 0, 1), pts, mode, s, kCfg);
    EXPECT_LT(out.setpoint.y(), 0.0) << to_string(mode);
  }
}

TEST(ApfSetpoint, OutsideInfluenceBothModesArePureAttraction) {
  const std::vector<Vector2> pts{{1.0, 0.0}, {0.0, 2.0}};
  ForceState a, b;
  const Vector3 p_ref(0.5, 0.3, 1), p_hat(0, 0, 1);
  EXPECT_EQ(apf_setpoint(p_ref, p_hat, pts, ApfMode::kBaseline, a, kCfg).setpoint,
            apf_setpoint(p_ref, p_hat, pts, ApfMode::kEnhanced, b, kCfg).setpoint);
}

TEST(ApfConfig, Validation) {
  EXPECT_NO_THROW(kCfg.validate());
  ApfConfig c;
  c.r_s = 0.8;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ApfConfig{};
  c.l_a = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace reactnav
