#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ginod/dynamics.hpp"
#include "support.hpp"

using namespace ginod;

namespace {

JointState random_state(std::mt19937_64& rng, int agents) {
  JointState x(kAgentStateDim * agents);
  for (int i = 0; i < agents; ++i)
    x.segment<4>(4 * i) << support::uniform(rng, -20, 20), support::uniform(rng, -5, 5),
        support::uniform(rng, -1.5, 1.5), support::uniform(rng, 0.5, 6);
  return x;
}

JointControl random_controls(std::mt19937_64& rng, int agents) {
  JointControl u;
  for (int i = 0; i < agents; ++i)
    u.push_back(ControlInput(support::uniform(rng, -4, 4), support::uniform(rng, -0.7, 0.7)));
  return u;
}

}  // namespace

TEST(BicycleRhs, StraightCoasting) {
  const AgentState dx = bicycle_rhs<double>(AgentState(0, 0, 0, 1), ControlInput(0, 0), 2.8);
  EXPECT_TRUE(dx.isApprox(AgentState(1, 0, 0, 0)));
}

TEST(BicycleRhs, HeadingAlongY) {
  const AgentState dx =
      bicycle_rhs<double>(AgentState(0, 0, std::numbers::pi / 2, 2), ControlInput(1, 0), 2.8);
  EXPECT_NEAR(dx(0), 0.0, 1e-15);
  EXPECT_NEAR(dx(1), 2.0, 1e-15);
  EXPECT_EQ(dx(2), 0.0);
  EXPECT_EQ(dx(3), 1.0);
}

TEST(BicycleRhs, YawRateMatchesLongDouble) {
  const AgentState dx = bicycle_rhs<double>(AgentState(0, 0, 0, 2), ControlInput(0, 0.1), 2.8);
  const long double expected = 2.0L * std::tan(0.1L) / 2.8L;
  EXPECT_NEAR(dx(2), static_cast<double>(expected), 1e-15);
  EXPECT_NEAR(dx(2), 0.07168, 5e-5);
}

TEST(BicycleRhs, RejectsBadInput) {
  EXPECT_THROW(bicycle_rhs<double>(AgentState(0, 0, 0, 1), ControlInput(0, 0), 0.0),
               DimensionError);
  EXPECT_THROW(bicycle_rhs<double>(AgentState(0, NAN, 0, 1), ControlInput(0, 0), 2.8),
               SolverError);
}

TEST(StepJoint, RestIsFixed) {
  JointState x = JointState::Zero(8);
  const JointControl u(2, ControlInput::Zero());
  EXPECT_EQ(step_joint(x, u, 0.2, VehicleParams{}), x);
}

TEST(StepJoint, HandComputedSteps) {
  JointState x(4);
  x << 0, 0, 0, 3;
  const JointControl coast = {ControlInput(0, 0)};
  EXPECT_TRUE(step_joint(x, coast, 0.2, VehicleParams{}).isApprox(Eigen::Vector4d(0.6, 0, 0, 3)));
  const JointControl accel = {ControlInput(1, 0)};
  EXPECT_TRUE(step_joint(x, accel, 0.2, VehicleParams{}).isApprox(Eigen::Vector4d(0.6, 0, 0, 3.2)));
}

TEST(StepJoint, SpeedClampedAtMinimum) {
  JointState x(4);
  x << 0, 0, 0, 0.5;
  const JointControl brake = {ControlInput(-5, 0)};
  const JointState next = step_joint(x, brake, 0.2, VehicleParams{});
  EXPECT_EQ(next(kV), 0.0);
}

TEST(StepJoint, DimensionMismatch) {
  const JointState x = JointState::Zero(8);
  const JointControl u(1, ControlInput::Zero());
  EXPECT_THROW(step_joint(x, u, 0.2, VehicleParams{}), DimensionError);
  EXPECT_THROW(step_joint(JointState::Zero(7), JointControl(2, ControlInput::Zero()), 0.2,
                          VehicleParams{}),
               DimensionError);
}

TEST(StepJoint, PermutationEquivariant) {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 20; ++s) {
    const JointState x = random_state(rng, 2);
    const JointControl u = random_controls(rng, 2);
    JointState xs(8);
    xs << x.segment<4>(4), x.segment<4>(0);
    const JointControl us = {u[1], u[0]};
    const JointState a = step_joint(x, u, 0.2, VehicleParams{});
    const JointState b = step_joint(xs, us, 0.2, VehicleParams{});
    EXPECT_EQ(a.segment<4>(0), b.segment<4>(4));
    EXPECT_EQ(a.segment<4>(4), b.segment<4>(0));
  }
}

TEST(StepJoint, FirstOrderConvergenceToRhs) {
  std::mt19937_64 rng(5);
  const JointState x = random_state(rng, 2);
  const JointControl u = random_controls(rng, 2);
  const JointState f = joint_rhs(x, u, VehicleParams{});
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const JointState q = (step_joint(x, u, dt, VehicleParams{}) - x) / dt;
    EXPECT_LT((q - f).norm(), 1e-10 * f.norm() + 1e-12);
  }
}

TEST(Linearize, StraightLineStructure) {
  JointState x(8);
  x << 0, 5, 0, 3, 5, 2, 0, 3;
  const JointControl u(2, ControlInput::Zero());
  const LinearizedDynamics lin = linearize_joint(x, u, 0.2, VehicleParams{});
  for (int k = 0; k < 8; ++k) EXPECT_EQ(lin.A(k, k), 1.0);
  EXPECT_DOUBLE_EQ(lin.A(kPx, kV), 0.2);
  EXPECT_DOUBLE_EQ(lin.A(4 + kPx, 4 + kV), 0.2);
  EXPECT_TRUE(lin.B[0].bottomRows(4).isZero(0.0));
  EXPECT_TRUE(lin.B[1].topRows(4).isZero(0.0));
}

TEST(Linearize, MatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  const VehicleParams vp;
  for (int s = 0; s < 100; ++s) {
    const JointState x = random_state(rng, 2);
    const JointControl u = random_controls(rng, 2);
    const LinearizedDynamics lin = linearize_joint(x, u, 0.2, vp);

    const Eigen::MatrixXd A_fd = support::fd_jacobian(
        [&](const Eigen::VectorXd& y) { return step_joint(y, u, 0.2, vp); }, x, 1e-5);
    EXPECT_LE(support::rel_err(lin.A, A_fd), 1e-6) << "sample " << s;

    for (int i = 0; i < 2; ++i) {
      const Eigen::MatrixXd B_fd = support::fd_jacobian(
          [&](const Eigen::VectorXd& v) {
            JointControl w = u;
            w[i] = v;
            return step_joint(x, w, 0.2, vp);
          },
          u[i], 1e-5);
      EXPECT_LE(support::rel_err(lin.B[i], B_fd), 1e-6) << "sample " << s << " player " << i;
    }
  }
}
