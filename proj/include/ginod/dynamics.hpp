///////////////////////////////////////////////////////////////////////////////
//
// Kinematic bicycle dynamics for each agent, the concatenated joint system,
// forward-Euler discretization and its analytic linearization.
//
// Per-agent state is (px, py, phi, v); per-agent control is (accel, steer).
// The joint state is the concatenation of all agents' states.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_DYNAMICS_HPP
#define GINOD_DYNAMICS_HPP

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ginod/types.hpp"

namespace ginod {

inline constexpr int kAgentStateDim = 4;
inline constexpr int kAgentControlDim = 2;

enum StateIndex : int { kPx = 0, kPy = 1, kPhi = 2, kV = 3 };
enum ControlIndex : int { kAccel = 0, kSteer = 1 };

template <typename Scalar>
using AgentStateT = Eigen::Matrix<Scalar, kAgentStateDim, 1>;
template <typename Scalar>
using ControlInputT = Eigen::Matrix<Scalar, kAgentControlDim, 1>;

using AgentState = AgentStateT<double>;
using ControlInput = ControlInputT<double>;
using JointState = Eigen::VectorXd;
using JointControl = std::vector<ControlInput>;

// Axis-aligned control limits for one agent.
struct ControlBox {
  ControlInput lo{-5.0, -0.8};
  ControlInput hi{5.0, 0.8};

  ControlInput project(const ControlInput& u) const {
    return u.cwiseMax(lo).cwiseMin(hi);
  }
  bool contains(const ControlInput& u, double slack = 0.0) const {
    return ((u - lo).array() >= -slack).all() &&
           ((hi - u).array() >= -slack).all();
  }
};

struct VehicleParams {
  double wheelbase = 2.8;
  double v_min = 0.0;
  ControlBox box;
};

// Continuous-time rear-axle kinematic bicycle model.
template <typename Scalar>
AgentStateT<Scalar> bicycle_rhs(const AgentStateT<Scalar>& state,
                                const ControlInputT<Scalar>& control,
                                Scalar wheelbase) {
  using std::cos;
  using std::sin;
  using std::tan;
  if (!(wheelbase > Scalar(0)))
    throw DimensionError("bicycle_rhs: wheelbase must be positive");
  if (!state.allFinite() || !control.allFinite())
    throw SolverError("bicycle_rhs: non-finite state or control");
  const Scalar phi = state(kPhi);
  const Scalar v = state(kV);
  AgentStateT<Scalar> dx;
  dx << v * cos(phi), v * sin(phi), v * tan(control(kSteer)) / wheelbase,
      control(kAccel);
  return dx;
}

inline int num_agents(const JointState& x) {
  return static_cast<int>(x.size()) / kAgentStateDim;
}

inline auto agent_block(JointState& x, int i) {
  return x.segment<kAgentStateDim>(kAgentStateDim * i);
}
inline auto agent_block(const JointState& x, int i) {
  return x.segment<kAgentStateDim>(kAgentStateDim * i);
}

// Continuous joint vector field f(x, u).
JointState joint_rhs(const JointState& x, std::span<const ControlInput> u,
                     const VehicleParams& params);

// One forward-Euler step x + dt f(x, u), with speeds clamped at v_min.
JointState step_joint(const JointState& x, std::span<const ControlInput> u,
                      double dt, const VehicleParams& params);

struct LinearizedDynamics {
  Eigen::MatrixXd A;               // n_x x n_x
  std::vector<Eigen::MatrixXd> B;  // per player, n_x x n_u
  Eigen::VectorXd affine;          // drift residual, zero along rollouts
};

// A = I + dt df/dx, B_i = dt df/du_i at (x, u). The speed clamp is ignored.
LinearizedDynamics linearize_joint(const JointState& x,
                                   std::span<const ControlInput> u, double dt,
                                   const VehicleParams& params);

}  // namespace ginod

#endif  // GINOD_DYNAMICS_HPP
