///////////////////////////////////////////////////////////////////////////////
//
// Receding-horizon simulation: at every step solve all subgames at the
// current state, plan each agent's control with its QMDP policy, advance the
// physical state and then the opinions and attentions.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_SIM_HPP
#define GINOD_SIM_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ginod/opinion.hpp"
#include "ginod/scenario.hpp"

namespace ginod {

struct LogRow {
  int t = 0;
  double time = 0.0;
  Eigen::VectorXd x;                  // state at the start of the step
  std::vector<ControlInput> u;
  Opinions z_plan;                    // opinions used by the planners
  Opinions z;                         // after this step's update
  Opinions z_bar;                     // nominal the update is taken from
  Opinions dz;                        // z = z_bar + dz
  Opinions sigma;                     // softmax(z)
  std::vector<double> lambda;         // after this step's update
  std::vector<double> poi;            // at z_plan and x
  ValueTable values;                  // subgame values at x
  std::vector<int> ilq_iterations;    // per tuple
  std::vector<bool> ilq_converged;    // per tuple
  std::vector<double> plan_objective; // per agent
  std::vector<int> plan_iterations;   // per agent
};

struct TrajectoryLog {
  std::vector<LogRow> rows;
  Eigen::VectorXd final_state;

  std::vector<std::string> column_names(const ScenarioConfig& cfg) const;
};

// All entries epsilon; z_bar = z, dz = 0. Throws ConfigError for epsilon <= 0.
OpinionState initialize_opinions(const ScenarioConfig& cfg);

// Runs the loop, appending to `log` as it goes so a failure leaves the rows
// computed so far. Errors are rethrown with the step index prepended.
void run(const ScenarioConfig& cfg, TrajectoryLog& log);
TrajectoryLog run(const ScenarioConfig& cfg);

void write_csv(const TrajectoryLog& log, const ScenarioConfig& cfg, std::ostream& os);
nlohmann::json metadata(const TrajectoryLog& log, const ScenarioConfig& cfg);

// Sum over logged steps of c_I plus the exact indicator rewards of all the
// agent's options.
double realized_cost(const TrajectoryLog& log, const ScenarioConfig& cfg, int player);

// Smallest distance between any two agents over the logged states and the
// final state.
double min_pairwise_distance(const TrajectoryLog& log);

// Index of the option whose target region's y-band is closest to py.
int corridor_of(const ThetaSet& options, double py);

}  // namespace ginod

#endif  // GINOD_SIM_HPP
