#include "ginod/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "ginod/planner.hpp"

namespace ginod {
namespace {

const char* kStateNames[] = {"px", "py", "phi", "v"};
const char* kControlNames[] = {"accel", "steer"};

std::string tuple_label(const std::vector<int>& tuple) {
  std::string s;
  for (std::size_t k = 0; k < tuple.size(); ++k) s += "_" + std::to_string(tuple[k] + 1);
  return s;
}

template <typename E>
[[noreturn]] void rethrow_at(int t, const E& e) {
  throw E("step " + std::to_string(t) + ": " + e.what());
}

}  // namespace

OpinionState initialize_opinions(const ScenarioConfig& cfg) {
  const double eps = cfg.opinion.epsilon;
  if (!(eps > 0.0)) throw ConfigError("opinion.epsilon must be positive");
  OpinionState s;
  for (int c : cfg.option_counts()) {
    s.z.push_back(Eigen::VectorXd::Constant(c, eps));
    s.dz.push_back(Eigen::VectorXd::Zero(c));
  }
  s.z_bar = s.z;
  return s;
}

void run(const ScenarioConfig& cfg, TrajectoryLog& log) {
  validate(cfg);
  const int n = cfg.num_agents();
  const double dt = cfg.sim.dt;

  OpinionState op = initialize_opinions(cfg);
  std::vector<double> lambda(n, cfg.opinion.lambda0);
  Eigen::VectorXd x = cfg.initial_state();
  Opinions z = op.z;
  Opinions z_bar_prev = op.z;
  Opinions dz = op.dz;
  SubgameBank previous;
  bool have_previous = false;

  log.rows.clear();
  log.final_state = x;

  for (int t = 0; t < cfg.sim.steps; ++t) {
    try {
      LogRow row;
      row.t = t;
      row.time = t * dt;
      row.x = x;

      SubgameBank bank = solve_all_subgames(x, cfg, have_previous ? &previous : nullptr);
      row.values = value_table(bank, x, 0);
      for (int k = 0; k < bank.size(); ++k) {
        row.ilq_iterations.push_back(bank.at_index(k).result.iterations);
        row.ilq_converged.push_back(bank.at_index(k).result.converged);
      }

      const Opinions z_bar = z;
      row.z_plan = z;
      for (int i = 0; i < n; ++i) row.poi.push_back(price_of_indecision(i, z, row.values));

      for (int i = 0; i < n; ++i) {
        const PlannerOutput out =
            cfg.agents[i].planner == PlannerKind::kL1
                ? l1_policy(i, x, z, lambda, bank, cfg)
                : l0_policy(i, x, z, bank, cfg);
        row.u.push_back(cfg.vehicle.box.project(out.control));
        row.plan_objective.push_back(out.objective);
        row.plan_iterations.push_back(out.iterations);
      }
      const Eigen::VectorXd x_next = step_joint(x, row.u, dt, cfg.vehicle);

      if (t >= 1) {
        // Dynamics built around the previous nominal, evaluated at x(t).
        const GiNODParams params = synthesize_ginod(z_bar_prev, row.values, cfg.opinion.damping);
        const Opinions drive = value_drive(z_bar_prev, row.values, cfg.opinion.value_drive);
        OpinionState st{z, z_bar_prev, dz};
        const OpinionUpdate up =
            integrate_opinions(st, AttentionState{lambda}, params, row.poi, dt,
                               cfg.opinion.attention_damping, cfg.opinion.attention_scale,
                               &drive);
        dz = up.opinions.dz;
        z = up.opinions.z;
        lambda = up.attention.lambda;
        row.z_bar = z_bar_prev;
      } else {
        row.z_bar = z;
      }
      row.z = z;
      row.dz = dz;
      for (const auto& zi : z) row.sigma.push_back(softmax(zi));
      row.lambda = lambda;

      log.rows.push_back(std::move(row));
      z_bar_prev = z_bar;
      x = x_next;
      log.final_state = x;
      previous = std::move(bank);
      have_previous = true;
    } catch (const ConfigError& e) {
      rethrow_at(t, e);
    } catch (const DimensionError& e) {
      rethrow_at(t, e);
    } catch (const SolverError& e) {
      rethrow_at(t, e);
    }
  }
}

TrajectoryLog run(const ScenarioConfig& cfg) {
  TrajectoryLog log;
  run(cfg, log);
  return log;
}

std::vector<std::string> TrajectoryLog::column_names(const ScenarioConfig& cfg) const {
  const int n = cfg.num_agents();
  const auto counts = cfg.option_counts();
  std::vector<std::string> cols = {"t", "time"};
  for (int i = 0; i < n; ++i)
    for (const char* s : kStateNames) cols.push_back("x" + std::to_string(i + 1) + "_" + s);
  for (int i = 0; i < n; ++i)
    for (const char* s : kControlNames) cols.push_back("u" + std::to_string(i + 1) + "_" + s);
  for (const char* prefix : {"z", "zbar", "dz", "sigma"})
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < counts[i]; ++l)
        cols.push_back(std::string(prefix) + std::to_string(i + 1) + "_" + std::to_string(l + 1));
  for (int i = 0; i < n; ++i) cols.push_back("lambda" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i) cols.push_back("poi" + std::to_string(i + 1));
  SubgameBank shape(counts);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < shape.size(); ++k)
      cols.push_back("value" + std::to_string(i + 1) + tuple_label(shape.tuple_of(k)));
  for (int k = 0; k < shape.size(); ++k)
    cols.push_back("ilq_iters" + tuple_label(shape.tuple_of(k)));
  for (int k = 0; k < shape.size(); ++k)
    cols.push_back("ilq_converged" + tuple_label(shape.tuple_of(k)));
  for (int i = 0; i < n; ++i) cols.push_back("plan_objective" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i) cols.push_back("plan_iters" + std::to_string(i + 1));
  return cols;
}

void write_csv(const TrajectoryLog& log, const ScenarioConfig& cfg, std::ostream& os) {
  const auto cols = log.column_names(cfg);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  os << std::setprecision(17);
  for (const auto& r : log.rows) {
    os << r.t << ',' << r.time;
    for (int k = 0; k < r.x.size(); ++k) os << ',' << r.x(k);
    for (const auto& u : r.u) os << ',' << u(0) << ',' << u(1);
    for (const Opinions* ops : {&r.z, &r.z_bar, &r.dz, &r.sigma})
      for (const auto& v : *ops)
        for (int l = 0; l < v.size(); ++l) os << ',' << v(l);
    for (double v : r.lambda) os << ',' << v;
    for (double v : r.poi) os << ',' << v;
    for (const auto& vals : r.values.values)
      for (int k = 0; k < vals.size(); ++k) os << ',' << vals(k);
    for (int v : r.ilq_iterations) os << ',' << v;
    for (bool v : r.ilq_converged) os << ',' << (v ? 1 : 0);
    for (double v : r.plan_objective) os << ',' << v;
    for (int v : r.plan_iterations) os << ',' << v;
    os << '\n';
  }
}

nlohmann::json metadata(const TrajectoryLog& log, const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["columns"] = log.column_names(cfg);
  j["rows"] = log.rows.size();
  std::vector<double> xf(log.final_state.data(),
                         log.final_state.data() + log.final_state.size());
  j["final_state"] = xf;
  return j;
}

double realized_cost(const TrajectoryLog& log, const ScenarioConfig& cfg, int player) {
  const ThetaSet& options = cfg.agents.at(player).options;
  double total = 0.0;
  for (const auto& r : log.rows) {
    total += stage_cost_independent(player, r.x, r.u[player], cfg.cost);
    for (int th = 0; th < static_cast<int>(options.size()); ++th)
      total += stage_cost_dependent(player, r.x, th, options, false, cfg.cost.kappa);
  }
  return total;
}

double min_pairwise_distance(const TrajectoryLog& log) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const Eigen::VectorXd& x) {
    const int n = num_agents(x);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        best = std::min(best, (x.segment<2>(kAgentStateDim * i) -
                               x.segment<2>(kAgentStateDim * j)).norm());
  };
  for (const auto& r : log.rows) scan(r.x);
  if (log.final_state.size() > 0) scan(log.final_state);
  return best;
}

int corridor_of(const ThetaSet& options, double py) {
  int best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(options.size()); ++k) {
    const auto& r = options[k].region;
    const double d = py < r.y_lo ? r.y_lo - py : (py > r.y_hi ? py - r.y_hi : 0.0);
    if (d < dist) {
      dist = d;
      best = k;
    }
  }
  return best;
}

}  // namespace ginod
