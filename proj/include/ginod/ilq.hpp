///////////////////////////////////////////////////////////////////////////////
//
// Iterative linear-quadratic (ILQ) solver for N-player general-sum games.
//
// Each iteration linearizes the dynamics and quadratizes every player's cost
// along the current nominal trajectory, solves the resulting discrete-time LQ
// game for feedback Nash policies with a coupled Riccati recursion, and rolls
// the policies out from x0 with a backtracking step on the feedforward term.
//
// Policies are u^i(t) = u_bar^i(t) + K^i(t) (x - x_bar(t)) + kappa^i(t); values
// are V^i_t(x) ~ 0.5 dx' Z dx + dx' zeta + v with dx = x - x_bar(t).
//
// A "subgame bank" holds one solution per tuple of intent options.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_ILQ_HPP
#define GINOD_ILQ_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ginod/cost.hpp"
#include "ginod/dynamics.hpp"
#include "ginod/scenario.hpp"

namespace ginod {

// Indexed [t][player].
struct SubgamePolicy {
  std::vector<Eigen::VectorXd> x_nominal;                 // horizon + 1
  std::vector<std::vector<Eigen::VectorXd>> u_nominal;    // horizon
  std::vector<std::vector<Eigen::MatrixXd>> K;            // horizon
  std::vector<std::vector<Eigen::VectorXd>> kappa;        // horizon

  int horizon() const { return static_cast<int>(K.size()); }
  int num_players() const { return K.empty() ? 0 : static_cast<int>(K[0].size()); }

  // Feedback control of `player` at step t (clamped to the last step).
  Eigen::VectorXd control(int player, int t, const Eigen::VectorXd& x) const;
};

struct SubgameValue {
  std::vector<Eigen::VectorXd> x_nominal;            // horizon + 1
  std::vector<std::vector<Eigen::MatrixXd>> Z;       // horizon + 1
  std::vector<std::vector<Eigen::VectorXd>> zeta;    // horizon + 1
  std::vector<std::vector<double>> v;                // horizon + 1

  int horizon() const { return static_cast<int>(Z.size()) - 1; }
};

// Quadratic value evaluation at dx = x - x_bar(t).
double eval_value(const SubgameValue& val, int player, const Eigen::VectorXd& x,
                  int t);

// Solution of one LQ game in deviation coordinates. u = K dx + kappa.
// `n` is the constant term of each player's value.
struct LqSolution {
  std::vector<std::vector<Eigen::MatrixXd>> K;
  std::vector<std::vector<Eigen::VectorXd>> kappa;
  std::vector<std::vector<Eigen::MatrixXd>> Z;
  std::vector<std::vector<Eigen::VectorXd>> zeta;
  std::vector<std::vector<double>> n;
};

// lin has `horizon` entries; quad has horizon + 1 rows (the last is the
// terminal cost), each with one QuadratizedCost per player.
LqSolution solve_lq_game(std::span<const LinearizedDynamics> lin,
                         const std::vector<std::vector<QuadratizedCost>>& quad);

struct IlqIterate {
  int iteration = 0;
  double step = 1.0;
  double max_change = 0.0;
  std::vector<double> costs;  // per player, smooth
};

struct IlqResult {
  SubgamePolicy policy;
  SubgameValue value;
  bool converged = false;
  int iterations = 0;
  std::vector<IlqIterate> trace;
};

struct IlqOptions {
  int horizon = 10;
  int max_iters = 50;
  double tol = 1e-3;
  double ls_factor = 0.5;
  int ls_max_halvings = 10;
  double trust_radius = 2.0;
  double divergence_bound = 1e6;

  static IlqOptions from(const IlqSettings& s) {
    return {s.horizon, s.max_iters, s.tol, s.ls_factor,
            s.ls_max_halvings, s.trust_radius, s.divergence_bound};
  }
};

// Abstract N-player game with Euler-discretized dynamics and smooth costs.
class Game {
 public:
  virtual ~Game() = default;
  virtual int num_players() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim(int player) const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x,
                               const std::vector<Eigen::VectorXd>& u) const = 0;
  virtual LinearizedDynamics linearize(
      const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& u) const = 0;
  virtual QuadratizedCost quadratize(int player, const Eigen::VectorXd& x,
                                     const std::vector<Eigen::VectorXd>& u) const = 0;
  virtual QuadratizedCost quadratize_terminal(int player,
                                              const Eigen::VectorXd& x) const = 0;
  virtual double stage_cost(int player, const Eigen::VectorXd& x,
                            const std::vector<Eigen::VectorXd>& u) const = 0;
  virtual double terminal_cost(int player, const Eigen::VectorXd& x) const = 0;
  // Control limits applied during closed-loop rollouts. Default: none.
  virtual Eigen::VectorXd project_control(int, const Eigen::VectorXd& u) const { return u; }
};

// The toll-plaza style subgame: bicycle agents, c_I + smooth c_D(theta).
class ScenarioGame final : public Game {
 public:
  ScenarioGame(const ScenarioConfig& cfg, std::vector<int> theta_tuple);

  int num_players() const override;
  int state_dim() const override;
  int control_dim(int) const override { return kAgentControlDim; }
  Eigen::VectorXd step(const Eigen::VectorXd& x,
                       const std::vector<Eigen::VectorXd>& u) const override;
  LinearizedDynamics linearize(const Eigen::VectorXd& x,
                               const std::vector<Eigen::VectorXd>& u) const override;
  QuadratizedCost quadratize(int player, const Eigen::VectorXd& x,
                             const std::vector<Eigen::VectorXd>& u) const override;
  QuadratizedCost quadratize_terminal(int player, const Eigen::VectorXd& x) const override;
  double stage_cost(int player, const Eigen::VectorXd& x,
                    const std::vector<Eigen::VectorXd>& u) const override;
  double terminal_cost(int player, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd project_control(int, const Eigen::VectorXd& u) const override;

  const std::vector<int>& theta_tuple() const { return theta_; }

 private:
  const ScenarioConfig* cfg_;
  std::vector<ThetaSet> options_;
  std::vector<int> theta_;
};

// Open-loop rollout helpers.
std::vector<Eigen::VectorXd> rollout(const Game& game, const Eigen::VectorXd& x0,
                                     const std::vector<std::vector<Eigen::VectorXd>>& u);
std::vector<double> trajectory_costs(const Game& game,
                                     const std::vector<Eigen::VectorXd>& xs,
                                     const std::vector<std::vector<Eigen::VectorXd>>& us);

// Runs ILQ from x0. `initial_controls` (horizon x players) seeds the nominal;
// zeros when absent. Throws SolverError on divergence.
IlqResult ilq_solve(const Game& game, const Eigen::VectorXd& x0,
                    const IlqOptions& opts,
                    const std::vector<std::vector<Eigen::VectorXd>>* initial_controls =
                        nullptr);

// Convenience overload for scenario subgames.
IlqResult ilq_solve(const Eigen::VectorXd& x0, std::span<const int> theta_tuple,
                    const ScenarioConfig& scenario, int horizon, int max_iters,
                    double tol);

// Controls for warm-starting from a previous solution after one step:
// closed-loop rollout of the shifted policy from the new x0.
std::vector<std::vector<Eigen::VectorXd>> shifted_warm_start(
    const Game& game, const SubgamePolicy& previous, const Eigen::VectorXd& x0);

struct SubgameEntry {
  std::vector<int> tuple;
  IlqResult result;
};

class SubgameBank {
 public:
  SubgameBank() = default;
  explicit SubgameBank(std::vector<int> option_counts);

  const std::vector<int>& option_counts() const { return counts_; }
  int num_players() const { return static_cast<int>(counts_.size()); }
  int size() const { return static_cast<int>(entries_.size()); }

  // Row-major flat index; the first player's option varies slowest.
  int index_of(std::span<const int> tuple) const;
  std::vector<int> tuple_of(int index) const;

  const SubgameEntry& at(std::span<const int> tuple) const;
  const SubgameEntry& at_index(int index) const;
  SubgameEntry& at_index(int index);
  bool has(std::span<const int> tuple) const;

  void set(std::span<const int> tuple, IlqResult result);
  bool complete() const;

 private:
  std::vector<int> counts_;
  std::vector<std::optional<SubgameEntry>> entries_;
};

// Number of tuples in the Cartesian product of option sets.
int tuple_count(std::span<const int> option_counts);

// Solves every subgame at x0. With `previous`, each solve is warm-started from
// the corresponding shifted policy. Errors are rethrown tagged by tuple.
SubgameBank solve_all_subgames(const Eigen::VectorXd& x0, const ScenarioConfig& scenario,
                               const SubgameBank* previous = nullptr);

}  // namespace ginod

#endif  // GINOD_ILQ_HPP
