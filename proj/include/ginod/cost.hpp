///////////////////////////////////////////////////////////////////////////////
//
// Stage costs for each player. The parameter-independent part c_I tracks a
// reference speed, penalizes control effort, and adds squared-hinge soft
// constraints for inter-agent separation, road edges and disc obstacles.
// The parameter-dependent part c_D is a (negative) reward for being inside the
// target region of the chosen option, either as an exact indicator or as a
// smooth product of logistic ramps used inside the ILQ solver.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_COST_HPP
#define GINOD_COST_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ginod/dynamics.hpp"

namespace ginod {

struct TargetRegion {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;

  bool contains(double px, double py) const {
    return px >= x_lo && px <= x_hi && py >= y_lo && py <= y_hi;
  }
};

// One intent option theta for an agent.
struct OptionSpec {
  std::string name;
  TargetRegion region;
  double weight = 1.0;
};

using ThetaSet = std::vector<OptionSpec>;

struct DiscObstacle {
  double x = 0.0;
  double y = 0.0;
  double radius = 1.0;  // clearance radius for the rear-axle point
};

struct CostConfig {
  double v_ref = 3.0;
  double w_speed = 1.0;
  double w_accel = 0.1;
  double w_steer = 1.0;
  double w_heading = 0.0;

  double w_collision = 10.0;
  double d_safe = 3.0;

  // Drivable band for the rear-axle point; squared hinge outside it.
  double w_road = 10.0;
  double road_y_lo = 0.0;
  double road_y_hi = 7.0;

  double w_obstacle = 10.0;
  std::vector<DiscObstacle> obstacles;

  double kappa = 5.0;  // logistic sharpness of the target surrogate [1/m]
};

// Parameter-independent stage cost c_I for player i.
double stage_cost_independent(int i, const JointState& x,
                              const ControlInput& u_i, const CostConfig& cfg);

// Parameter-dependent stage cost c_D for player i under option `theta`.
double stage_cost_dependent(int i, const JointState& x, int theta,
                            const ThetaSet& options, bool smooth,
                            double kappa);

// Logistic-product surrogate of the indicator of `region`, in [0, 1].
double region_membership(const TargetRegion& region, double px, double py,
                         double kappa);

// Value, gradient and (unregularized) Hessian of c_I + c_D(smooth) for one
// player. Control derivatives are with respect to the player's own control.
struct CostDerivatives {
  double value = 0.0;
  Eigen::VectorXd dx;
  Eigen::MatrixXd dxx;
  Eigen::Vector2d du = Eigen::Vector2d::Zero();
  Eigen::Matrix2d duu = Eigen::Matrix2d::Zero();
};

// `include_control` = false drops the control terms (terminal cost).
CostDerivatives stage_cost_derivatives(int i, const JointState& x,
                                       const ControlInput& u_i, int theta,
                                       const ThetaSet& options,
                                       const CostConfig& cfg,
                                       bool include_control = true);

struct QuadratizedCost {
  Eigen::MatrixXd Q;               // n_x x n_x, PSD
  Eigen::VectorXd q;               // n_x
  std::vector<Eigen::MatrixXd> R;  // per player j, n_uj x n_uj
  std::vector<Eigen::VectorXd> r;  // per player j
  double c0 = 0.0;
};

inline constexpr double kControlHessianFloor = 1e-6;

// Regularized quadratic model of player i's smooth stage cost at (x, u).
// `theta_tuple` holds every player's option index; only entry i is used.
QuadratizedCost quadratize(int i, const JointState& x,
                           std::span<const ControlInput> u,
                           std::span<const int> theta_tuple,
                           const std::vector<ThetaSet>& options,
                           const CostConfig& cfg);

// Terminal variant: state terms only, zero control blocks.
QuadratizedCost quadratize_terminal(int i, const JointState& x,
                                    std::span<const int> theta_tuple,
                                    const std::vector<ThetaSet>& options,
                                    const CostConfig& cfg, int num_players);

// Symmetrize and clamp eigenvalues from below.
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& H, double floor);

}  // namespace ginod

#endif  // GINOD_COST_HPP
