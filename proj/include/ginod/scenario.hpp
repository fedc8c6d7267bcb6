///////////////////////////////////////////////////////////////////////////////
//
// Scenario configuration: agents, intent options, cost weights, solver and
// opinion settings. Configs are JSON key trees; every key is optional and
// falls back to the defaults below, unknown keys are rejected.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_SCENARIO_HPP
#define GINOD_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ginod/cost.hpp"
#include "ginod/dynamics.hpp"

namespace ginod {

enum class PlannerKind { kL0, kL1 };

struct AgentConfig {
  AgentState x0 = AgentState::Zero();
  ThetaSet options;
  PlannerKind planner = PlannerKind::kL0;
};

struct SimSettings {
  double dt = 0.2;
  int steps = 75;
  std::uint64_t seed = 0;
};

struct IlqSettings {
  int horizon = 10;
  int max_iters = 50;
  double tol = 1e-3;
  bool warm_start = true;
  bool parallel = true;
  double ls_factor = 0.5;
  int ls_max_halvings = 10;
  // Largest accepted nominal state change when total cost does not decrease.
  double trust_radius = 2.0;
  double divergence_bound = 1e6;
};

struct OpinionSettings {
  double epsilon = 1e-2;
  double damping = 0.2;
  double attention_damping = 2.0;  // m
  double attention_scale = 5.0;    // rho
  double lambda0 = 0.0;
  // Gain on the saturated value-gradient drive added to the opinion update
  // (see README); 0 gives the bare game-induced dynamics.
  double value_drive = 1.0;
};

struct PlannerSettings {
  double qp_tol = 1e-8;
  int qp_max_iters = 500;
  int l1_starts = 8;
  double l1_fd_step = 1e-4;
  int l1_max_iters = 100;
  double l1_tol = 1e-7;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SimSettings sim;
  VehicleParams vehicle;
  CostConfig cost;
  std::vector<AgentConfig> agents;
  IlqSettings ilq;
  OpinionSettings opinion;
  PlannerSettings planner;

  int num_agents() const { return static_cast<int>(agents.size()); }
  JointState initial_state() const;
  std::vector<ThetaSet> options() const;
  std::vector<int> option_counts() const;
};

// Throws ConfigError naming the offending key.
void validate(const ScenarioConfig& cfg);

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path);

// Applies "dotted.key=value" overrides; array elements are addressed by index
// ("agents.0.planner=L1"). Unknown keys raise ConfigError.
ScenarioConfig apply_overrides(const ScenarioConfig& cfg,
                               const std::vector<std::string>& overrides);

// The two-car toll plaza. `heterogeneous` selects weights (40,50 | 50,40)
// instead of 15 everywhere; `car1_l1` switches car 1 to the L1 planner.
ScenarioConfig toll_scenario(bool heterogeneous = false, bool car1_l1 = false);

std::string to_string(PlannerKind kind);

}  // namespace ginod

#endif  // GINOD_SCENARIO_HPP
