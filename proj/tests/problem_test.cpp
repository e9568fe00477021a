#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "reactnav/problem.hpp"

namespace reactnav {
namespace {

constexpr std::array<double, 8> kQx{2, 2, 40, 5, 5, 5, 8, 8};
constexpr std::array<double, 3> kQu{5, 10, 10};
constexpr std::array<double, 3> kQdu{10, 20, 20};

NmpcProblem make_problem(std::size_t n, ObstacleCapacity cap = {1, 1}) {
  return NmpcProblem(ModelParams{}, CostWeights{}, HorizonConfig{n, 0.05}, RateBounds{}, cap);
}

// Cost written out term by term from the rollout, without the adjoint code.
double hand_cost(const Eigen::VectorXd& z, const ParameterVector& rho) {
  const ModelParams m;
  const std::vector<ControlInput> u = to_inputs(z);
  const std::vector<UavState> xs = rollout(rho.x_hat, u, m);
  double J = 0.0;
  for (const UavState& x : xs) {
    const StateVector e = x.to_vector() - rho.refs.x_ref;
    for (int k = 0; k < 8; ++k) J += kQx[k] * e(k) * e(k);
  }
  InputVector prev = rho.u_prev.to_vector();
  for (const ControlInput& uj : u) {
    const InputVector du = uj.to_vector() - rho.refs.u_ref;
    const InputVector dd = uj.to_vector() - prev;
    for (int a = 0; a < 3; ++a) J += kQu[a] * du(a) * du(a) + kQdu[a] * dd(a) * dd(a);
    prev = uj.to_vector();
  }
  return J;
}

double hand_penalized(const Eigen::VectorXd& z, const ParameterVector& rho, double q) {
  const ModelParams m;
  const std::vector<ControlInput> u = to_inputs(z);
  const Eigen::VectorXd G = assemble_G(u, rho.x_hat, rho.u_prev, rho.retained_circles(),
                                       rho.retained_rects(), RateBounds{}, m,
                                       ObstacleCapacity{rho.circles.size(), rho.rects.size()});
  return hand_cost(z, rho) + q * G.squaredNorm();
}

struct Instance {
  ParameterVector rho;
  Eigen::VectorXd z;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n) {
  const ModelParams m;
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  UavState x0 = UavState::hover_at(Vector3(0.0, 0.0, 1.0));
  x0.v = Vector3(1.0 + 0.5 * d(rng), 0.3 * d(rng), 0.1 * d(rng));
  x0.phi = 0.05 * d(rng);
  x0.theta = 0.05 * d(rng);
  ObstacleSet obs;
  obs.circles.push_back({Vector2(0.05 + 0.05 * d(rng), 0.02 * d(rng)), 0.5});
  obs.segments.push_back({Vector2(0.0 + 0.05 * d(rng), -0.8), Vector2(0.1, 0.8)});
  Instance inst;
  inst.rho = pack_rho(x0, References::setpoint(Vector3(3.0, 0.5, 1.2), m),
                      {9.81 + d(rng), 0.05 * d(rng), 0.05 * d(rng)}, obs,
                      {ObstacleCapacity{1, 1}, 0.4, 3.0});
  inst.z.resize(3 * static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    inst.z.segment<3>(3 * static_cast<Eigen::Index>(j)) =
        InputVector(9.81 + 3.0 * d(rng), 0.18 * d(rng), 0.18 * d(rng));
  return inst;
}

TEST(Cost, ZeroAtOnReferenceHover) {
  const ModelParams m;
  NmpcProblem problem = make_problem(10);
  const UavState x = UavState::hover_at(Vector3(1, 2, 1));
  const ParameterVector rho =
      pack_rho(x, References::setpoint(x.p, m), m.hover_input(), {}, {ObstacleCapacity{1, 1}});
  const Eigen::VectorXd z = m.hover_input().to_vector().replicate(10, 1);
  EXPECT_EQ(problem.cost(z, rho), 0.0);
  EXPECT_EQ(problem.penalized(z, rho, 1e4), 0.0);
  Eigen::VectorXd g;
  problem.penalized_gradient(z, rho, 1e4, g);
  EXPECT_EQ(g.norm(), 0.0);
}

TEST(Cost, OneMetreOffsetInX) {
  const ModelParams m;
  NmpcProblem problem = make_problem(1);
  const UavState x = UavState::hover_at(Vector3(1, 0, 1));
  const ParameterVector rho = pack_rho(x, References::setpoint(Vector3(0, 0, 1), m),
                                       m.hover_input(), {}, {ObstacleCapacity{1, 1}});
  const Eigen::VectorXd z = m.hover_input().to_vector();
  // Hover keeps the offset for both nodes j = 0 and j = 1.
  EXPECT_DOUBLE_EQ(problem.cost(z, rho), 2.0 * 2.0);
}

TEST(Cost, MatchesHandSummation) {
  std::mt19937_64 rng(3);
  NmpcProblem problem = make_problem(3);
  for (int k = 0; k < 20; ++k) {
    const Instance inst = random_instance(rng, 3);
    EXPECT_NEAR(problem.cost(inst.z, inst.rho), hand_cost(inst.z, inst.rho),
                1e-10 * (1.0 + hand_cost(inst.z, inst.rho)));
  }
}

TEST(Cost, NonNegative) {
  std::mt19937_64 rng(5);
  NmpcProblem problem = make_problem(5);
  for (int k = 0; k < 50; ++k) {
    const Instance inst = random_instance(rng, 5);
    EXPECT_GE(problem.cost(inst.z, inst.rho), 0.0);
  }
}

TEST(Cost, TranslationInvariant) {
  std::mt19937_64 rng(13);
  const ModelParams m;
  NmpcProblem problem = make_problem(5);
  for (int k = 0; k < 10; ++k) {
    const Instance inst = random_instance(rng, 5);
    const Vector3 t(4.0, -7.0, 2.0);
    ParameterVector moved = inst.rho;
    moved.x_hat.p += t;
    moved.refs.x_ref.head<3>() += t;
    for (CircleObstacle& c : moved.circles) c.center += t.head<2>();
    for (RectObstacle& r : moved.rects)
      for (HalfPlane& s : r.sides) s.offset -= s.normal.dot(t.head<2>());
    for (double q : {0.0, 1e3}) {
      const double a = problem.penalized(inst.z, inst.rho, q);
      EXPECT_NEAR(problem.penalized(inst.z, moved, q), a, 1e-8 * (1.0 + a));
    }
  }
}

TEST(Penalized, EqualsCostWithoutActiveConstraints) {
  const ModelParams m;
  NmpcProblem problem = make_problem(5);
  ObstacleSet far;
  far.circles.push_back({Vector2(2.5, 2.5), 0.4});
  const ParameterVector rho =
      pack_rho(UavState::hover_at(Vector3(0, 0, 1)), References::setpoint(Vector3(1, 0, 1), m),
               m.hover_input(), far, {ObstacleCapacity{1, 1}});
  const Eigen::VectorXd z = m.hover_input().to_vector().replicate(5, 1);
  EXPECT_EQ(problem.penalized(z, rho, 1e5), problem.cost(z, rho));
}

TEST(Penalized, LinearInQAndMatchesDirectEvaluation) {
  std::mt19937_64 rng(23);
  NmpcProblem problem = make_problem(4);
  int active = 0;
  for (int k = 0; k < 20; ++k) {
    const Instance inst = random_instance(rng, 4);
    const double J = problem.cost(inst.z, inst.rho);
    const double p1 = problem.penalized(inst.z, inst.rho, 1e3);
    const double p2 = problem.penalized(inst.z, inst.rho, 2e3);
    EXPECT_NEAR(p2 - J, 2.0 * (p1 - J), 1e-9 * (1.0 + p2));
    EXPECT_NEAR(p1, hand_penalized(inst.z, inst.rho, 1e3), 1e-9 * (1.0 + p1));
    active += p1 > J;
  }
  EXPECT_GT(active, 10);
}

TEST(Penalized, NonDecreasingInQ) {
  std::mt19937_64 rng(29);
  NmpcProblem problem = make_problem(5);
  for (int k = 0; k < 20; ++k) {
    const Instance inst = random_instance(rng, 5);
    double last = problem.penalized(inst.z, inst.rho, 0.0);
    for (double q : {1.0, 10.0, 1e3, 1e5}) {
      const double v = problem.penalized(inst.z, inst.rho, q);
      EXPECT_GE(v, last);
      last = v;
    }
  }
}

TEST(Penalized, ConstraintsMatchAssembleG) {
  std::mt19937_64 rng(37);
  NmpcProblem problem = make_problem(3);
  const Instance inst = random_instance(rng, 3);
  const ModelParams m;
  const Eigen::VectorXd G =
      assemble_G(to_inputs(inst.z), inst.rho.x_hat, inst.rho.u_prev, inst.rho.circles,
                 inst.rho.rects, RateBounds{}, m, ObstacleCapacity{1, 1});
  EXPECT_EQ(problem.constraints(inst.z, inst.rho), G);
}

class GradientTest : public ::testing::TestWithParam<std::size_t> {};

TEST_P(GradientTest, MatchesCentralDifferences) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(100 + n);
  NmpcProblem problem = make_problem(n);
  int checked = 0;
  int with_obstacles = 0;
  while (checked < 100) {
    const Instance inst = random_instance(rng, n);
    const double q = 1e3;
    Eigen::VectorXd g;
    problem.penalized_gradient(inst.z, inst.rho, q, g);
    Eigen::VectorXd fd(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      Eigen::VectorXd zp = inst.z, zm = inst.z;
      zp(i) += 1e-6;
      zm(i) -= 1e-6;
      fd(i) = (problem.penalized(zp, inst.rho, q) - problem.penalized(zm, inst.rho, q)) / 2e-6;
    }
    const double rel = (g - fd).norm() / std::max(1.0, fd.norm());
    EXPECT_LE(rel, 1e-5);
    ++checked;
    with_obstacles += problem.penalized(inst.z, inst.rho, q) > problem.cost(inst.z, inst.rho);
  }
  EXPECT_GT(with_obstacles, 50);
}

INSTANTIATE_TEST_SUITE_P(Horizons, GradientTest, ::testing::Values(2u, 5u));

TEST(Gradient, PenaltyPartLinearInQ) {
  std::mt19937_64 rng(41);
  NmpcProblem problem = make_problem(5);
  const Instance inst = random_instance(rng, 5);
  Eigen::VectorXd g0, g1, g2;
  problem.penalized_gradient(inst.z, inst.rho, 0.0, g0);
  problem.penalized_gradient(inst.z, inst.rho, 1e3, g1);
  problem.penalized_gradient(inst.z, inst.rho, 2e3, g2);
  EXPECT_NEAR(((g2 - g0) - 2.0 * (g1 - g0)).norm(), 0.0, 1e-8 * (1.0 + g2.norm()));
}

TEST(PackRho, NoDetectionsGivesFillers) {
  const ModelParams m;
  const ParameterVector rho = pack_rho(UavState{}, References::setpoint(Vector3::Zero(), m),
                                       m.hover_input(), {}, PackingConfig{});
  ASSERT_EQ(rho.circles.size(), 5u);
  ASSERT_EQ(rho.rects.size(), 10u);
  for (const auto& c : rho.circles) EXPECT_TRUE(c.is_filler());
  for (const auto& r : rho.rects) EXPECT_TRUE(r.is_filler());
  EXPECT_EQ(rho.to_flat().size(),
            static_cast<Eigen::Index>(ParameterVector::flat_size(ObstacleCapacity{})));
  EXPECT_EQ(ParameterVector::flat_size(ObstacleCapacity{}), 8u + 8 + 3 + 3 + 15 + 70);
}

TEST(PackRho, NearestCirclesInDistanceOrder) {
  const ModelParams m;
  ObstacleSet obs;
  for (int i = 6; i >= 0; --i) obs.circles.push_back({Vector2(0.5 + 0.3 * i, 0.0), 0.2});
  const ParameterVector rho = pack_rho(UavState{}, References::setpoint(Vector3::Zero(), m),
                                       m.hover_input(), obs, PackingConfig{});
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(rho.circles[i].center.x(), 0.5 + 0.3 * i);
  EXPECT_EQ(rho.retained_circles().size(), 5u);
}

TEST(PackRho, DropsObstaclesBeyondConsiderRadius) {
  const ModelParams m;
  ObstacleSet obs;
  obs.circles.push_back({Vector2(3.3, 0.0), 0.2});  // 3.1 m to the boundary
  obs.circles.push_back({Vector2(3.1, 0.0), 0.2});  // 2.9 m
  obs.segments.push_back({Vector2(0.0, 3.5), Vector2(1.0, 3.5)});
  obs.segments.push_back({Vector2(0.0, -2.0), Vector2(1.0, -2.0)});
  const ParameterVector rho = pack_rho(UavState{}, References::setpoint(Vector3::Zero(), m),
                                       m.hover_input(), obs, PackingConfig{});
  ASSERT_EQ(rho.retained_circles().size(), 1u);
  EXPECT_EQ(rho.retained_circles()[0].center.x(), 3.1);
  ASSERT_EQ(rho.retained_rects().size(), 1u);
  EXPECT_GT(h_rect(Vector2(0.5, -2.0), rho.retained_rects()[0]), 0.0);
}

TEST(PackRho, FlatRoundTrip) {
  std::mt19937_64 rng(43);
  const ModelParams m;
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  ObstacleSet obs;
  for (int i = 0; i < 3; ++i) obs.circles.push_back({Vector2(u(rng), u(rng)), 0.5});
  for (int i = 0; i < 4; ++i)
    obs.segments.push_back({Vector2(u(rng), u(rng)), Vector2(u(rng), u(rng))});
  const ParameterVector rho = pack_rho(UavState::hover_at(Vector3(0.1, 0.2, 1.0)),
                                       References::setpoint(Vector3(3, 0, 1), m),
                                       {9.0, 0.1, -0.1}, obs, PackingConfig{});
  const ParameterVector back = ParameterVector::from_flat(rho.to_flat(), rho.capacity());
  EXPECT_EQ(back.to_flat(), rho.to_flat());
  ASSERT_EQ(back.retained_circles().size(), rho.retained_circles().size());
  ASSERT_EQ(back.retained_rects().size(), rho.retained_rects().size());
  for (std::size_t i = 0; i < back.retained_circles().size(); ++i)
    EXPECT_EQ(back.retained_circles()[i].center, rho.retained_circles()[i].center);
  std::uniform_real_distribution<double> w(-3.0, 3.0);
  for (std::size_t i = 0; i < back.retained_rects().size(); ++i)
    for (int k = 0; k < 20; ++k) {
      const Vector2 p(w(rng), w(rng));
      EXPECT_NEAR(h_rect(p, back.retained_rects()[i]), h_rect(p, rho.retained_rects()[i]),
                  1e-12);
    }
  EXPECT_THROW(ParameterVector::from_flat(Eigen::VectorXd::Zero(3), rho.capacity()),
               std::invalid_argument);
}

TEST(Decision, InputsRoundTrip) {
  const std::vector<ControlInput> u{{9.0, 0.1, -0.1}, {10.0, 0.0, 0.2}};
  const Eigen::VectorXd z = to_decision(u);
  ASSERT_EQ(z.size(), 6);
  EXPECT_EQ(to_decision(to_inputs(z)), z);
  EXPECT_THROW(to_inputs(Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST(NmpcProblem, RejectsWrongDecisionLength) {
  NmpcProblem problem = make_problem(3);
  const ModelParams m;
  const ParameterVector rho = pack_rho(UavState{}, References::setpoint(Vector3::Zero(), m),
                                       m.hover_input(), {}, {ObstacleCapacity{1, 1}});
  EXPECT_THROW(problem.cost(Eigen::VectorXd::Zero(6), rho), std::invalid_argument);
  EXPECT_THROW(make_problem(0), std::invalid_argument);
}

}  // namespace
}  // namespace reactnav
