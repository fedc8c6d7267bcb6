#include "ginod/dynamics.hpp"

#include <algorithm>
#include <string>

namespace ginod {
namespace {

void check_dims(const JointState& x, std::span<const ControlInput> u) {
  if (x.size() % kAgentStateDim != 0 ||
      static_cast<std::size_t>(num_agents(x)) != u.size()) {
    throw DimensionError("joint state of size " + std::to_string(x.size()) +
                         " does not match " + std::to_string(u.size()) +
                         " controls");
  }
}

}  // namespace

JointState joint_rhs(const JointState& x, std::span<const ControlInput> u,
                     const VehicleParams& params) {
  check_dims(x, u);
  JointState dx(x.size());
  for (int i = 0; i < num_agents(x); ++i) {
    const AgentState xi = agent_block(x, i);
    agent_block(dx, i) = bicycle_rhs<double>(xi, u[i], params.wheelbase);
  }
  return dx;
}

JointState step_joint(const JointState& x, std::span<const ControlInput> u,
                      double dt, const VehicleParams& params) {
  if (!(dt > 0.0)) throw DimensionError("step_joint: dt must be positive");
  JointState next = x + dt * joint_rhs(x, u, params);
  for (int i = 0; i < num_agents(x); ++i) {
    double& v = next(kAgentStateDim * i + kV);
    v = std::max(v, params.v_min);
  }
  return next;
}

LinearizedDynamics linearize_joint(const JointState& x,
                                   std::span<const ControlInput> u, double dt,
                                   const VehicleParams& params) {
  check_dims(x, u);
  const int n = static_cast<int>(x.size());
  const int num = num_agents(x);
  const double L = params.wheelbase;

  LinearizedDynamics lin;
  lin.A = MatrixXd::Identity(n, n);
  lin.B.assign(num, MatrixXd::Zero(n, kAgentControlDim));
  lin.affine = VectorXd::Zero(n);

  for (int i = 0; i < num; ++i) {
    const int o = kAgentStateDim * i;
    const double phi = x(o + kPhi);
    const double v = x(o + kV);
    const double steer = u[i](kSteer);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double t = std::tan(steer);

    lin.A(o + kPx, o + kPhi) += -dt * v * s;
    lin.A(o + kPx, o + kV) += dt * c;
    lin.A(o + kPy, o + kPhi) += dt * v * c;
    lin.A(o + kPy, o + kV) += dt * s;
    lin.A(o + kPhi, o + kV) += dt * t / L;

    MatrixXd& B = lin.B[i];
    B(o + kPhi, kSteer) = dt * v * (1.0 + t * t) / L;
    B(o + kV, kAccel) = dt;
  }
  return lin;
}

}  // namespace ginod
