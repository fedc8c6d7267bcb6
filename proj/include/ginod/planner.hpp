///////////////////////////////////////////////////////////////////////////////
//
// Opinion-weighted QMDP planners.
//
// L0: one-step lookahead. Each subgame's quadratic value is expanded through
// the subgame's linearized dynamics (opponents follow that subgame's feedback
// policy), weighted by the opinion probabilities and added to the
// control-dependent stage cost. The result is a convex QP over the box.
//
// L1: two-step lookahead where the first action also moves the opinions
// through one Euler step of the opinion dynamics; opponents play L0 first.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_PLANNER_HPP
#define GINOD_PLANNER_HPP

#include <vector>

#include <Eigen/Dense>

#include "ginod/ilq.hpp"
#include "ginod/opinion.hpp"
#include "ginod/scenario.hpp"

namespace ginod {

// 0.5 u'Pu + q'u + c over lo <= u <= hi.
struct QPProblem {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  double c = 0.0;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  double objective(const Eigen::VectorXd& u) const {
    return 0.5 * u.dot(P * u) + q.dot(u) + c;
  }
  Eigen::VectorXd project(const Eigen::VectorXd& u) const {
    return u.cwiseMax(lo).cwiseMin(hi);
  }
};

struct QPResult {
  Eigen::VectorXd u;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Projected gradient with step 1/L, then an active-set refinement kept only if
// it lowers the objective. `history` receives the objective per iteration.
QPResult solve_qp(const QPProblem& qp, double tol = 1e-8, int max_iters = 500,
                  std::vector<double>* history = nullptr);

// L0 objective of `player` at x. The quadratic is expanded around u_ref
// (default: zero) and returned in absolute coordinates; P does not depend on
// the expansion point. `contributions` receives prob * value per tuple at u_ref.
QPProblem build_l0_objective(int player, const Eigen::VectorXd& x, const Opinions& z,
                             const SubgameBank& bank, const ScenarioConfig& cfg,
                             const ControlInput* u_ref = nullptr,
                             std::vector<double>* contributions = nullptr);

struct PlannerOutput {
  ControlInput control = ControlInput::Zero();
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> contributions;
};

PlannerOutput l0_policy(int player, const Eigen::VectorXd& x, const Opinions& z,
                        const SubgameBank& bank, const ScenarioConfig& cfg);

// Everything the L1 objective needs besides the decision vector.
struct L1Context {
  int player = 0;
  Eigen::VectorXd x;
  Opinions z;
  std::vector<double> lambda;
  const SubgameBank* bank = nullptr;
  const ScenarioConfig* cfg = nullptr;
  std::vector<ControlInput> opponents_l0;  // indexed by agent; own entry unused
};

L1Context make_l1_context(int player, const Eigen::VectorXd& x, const Opinions& z,
                          std::span<const double> lambda, const SubgameBank& bank,
                          const ScenarioConfig& cfg);

// c_I(x0, u0) + c_I(x1, u1) + Vhat(z1, x2) for the stacked decision (u0, u1).
double l1_objective(const L1Context& ctx, const Eigen::Vector4d& decision);

// Opinions after one step when the player applies u0.
Opinions l1_opinion_step(const L1Context& ctx, const ControlInput& u0);

PlannerOutput l1_policy(int player, const Eigen::VectorXd& x, const Opinions& z,
                        std::span<const double> lambda, const SubgameBank& bank,
                        const ScenarioConfig& cfg);

}  // namespace ginod

#endif  // GINOD_PLANNER_HPP
