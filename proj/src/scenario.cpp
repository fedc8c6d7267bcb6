#include "ginod/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ginod {

using nlohmann::json;

namespace {

// Reads fields from one JSON object, remembering which keys were consumed so
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + where(key) + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + where(k) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <int N>
Eigen::Matrix<double, N, 1> read_fixed(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N))
    throw ConfigError("config key '" + key + "' must be an array of " +
                      std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k) {
    if (!j[k].is_number())
      throw ConfigError("config key '" + key + "' must hold numbers");
    v(k) = j[k].get<double>();
  }
  return v;
}

PlannerKind planner_from_string(const std::string& s, const std::string& key) {
  if (s == "L0") return PlannerKind::kL0;
  if (s == "L1") return PlannerKind::kL1;
  throw ConfigError("config key '" + key + "' must be \"L0\" or \"L1\"");
}

json region_json(const TargetRegion& r) {
  return json::array({r.x_lo, r.x_hi, r.y_lo, r.y_hi});
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

}  // namespace

std::string to_string(PlannerKind kind) {
  return kind == PlannerKind::kL0 ? "L0" : "L1";
}

JointState ScenarioConfig::initial_state() const {
  JointState x(kAgentStateDim * num_agents());
  for (int i = 0; i < num_agents(); ++i) agent_block(x, i) = agents[i].x0;
  return x;
}

std::vector<ThetaSet> ScenarioConfig::options() const {
  std::vector<ThetaSet> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.options);
  return out;
}

std::vector<int> ScenarioConfig::option_counts() const {
  std::vector<int> out;
  for (const auto& a : agents) out.push_back(static_cast<int>(a.options.size()));
  return out;
}

void validate(const ScenarioConfig& cfg) {
  require(cfg.sim.dt > 0.0 && std::isfinite(cfg.sim.dt), "sim.dt", "must be positive");
  require(cfg.sim.steps >= 1, "sim.steps", "must be at least 1");
  require(cfg.vehicle.wheelbase > 0.0, "vehicle.wheelbase", "must be positive");
  require((cfg.vehicle.box.lo.array() <= cfg.vehicle.box.hi.array()).all(),
          "vehicle", "control bounds must satisfy lo <= hi");
  require(cfg.cost.kappa > 0.0, "cost.kappa", "must be positive");
  require(cfg.cost.d_safe >= 0.0, "cost.d_safe", "must be nonnegative");
  require(cfg.cost.road_y_lo < cfg.cost.road_y_hi, "cost.road_y", "must satisfy lo < hi");
  for (std::size_t k = 0; k < cfg.cost.obstacles.size(); ++k)
    require(cfg.cost.obstacles[k].radius > 0.0,
            "cost.obstacles." + std::to_string(k) + ".radius", "must be positive");
  require(!cfg.agents.empty(), "agents", "must list at least one agent");
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    const std::string base = "agents." + std::to_string(i);
    const auto& a = cfg.agents[i];
    require(a.x0.allFinite(), base + ".x0", "must be finite");
    require(a.options.size() >= 2, base + ".options", "needs at least two options");
    for (std::size_t k = 0; k < a.options.size(); ++k) {
      const auto& o = a.options[k];
      const std::string ok = base + ".options." + std::to_string(k);
      require(o.weight > 0.0, ok + ".weight", "must be positive");
      require(o.region.x_lo < o.region.x_hi && o.region.y_lo < o.region.y_hi,
              ok + ".region", "must satisfy x_lo < x_hi and y_lo < y_hi");
    }
  }
  require(cfg.ilq.horizon >= 1, "ilq.horizon", "must be at least 1");
  require(cfg.ilq.max_iters >= 1, "ilq.max_iters", "must be at least 1");
  require(cfg.ilq.tol > 0.0, "ilq.tol", "must be positive");
  require(cfg.ilq.ls_factor > 0.0 && cfg.ilq.ls_factor < 1.0, "ilq.ls_factor",
          "must lie in (0, 1)");
  require(cfg.ilq.ls_max_halvings >= 0, "ilq.ls_max_halvings", "must be nonnegative");
  require(cfg.opinion.epsilon > 0.0, "opinion.epsilon", "must be positive");
  require(cfg.opinion.damping > 0.0, "opinion.damping", "must be positive");
  require(cfg.opinion.attention_damping > 0.0, "opinion.attention_damping",
          "must be positive");
  require(cfg.opinion.attention_scale > 0.0, "opinion.attention_scale",
          "must be positive");
  require(cfg.opinion.lambda0 >= 0.0, "opinion.lambda0", "must be nonnegative");
  require(cfg.planner.qp_max_iters >= 1, "planner.qp_max_iters", "must be at least 1");
  require(cfg.planner.l1_starts >= 2, "planner.l1_starts", "must be at least 2");
  require(cfg.planner.l1_fd_step > 0.0, "planner.l1_fd_step", "must be positive");
}

json to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["sim"] = {{"dt", cfg.sim.dt}, {"steps", cfg.sim.steps}, {"seed", cfg.sim.seed}};
  const auto& b = cfg.vehicle.box;
  j["vehicle"] = {{"wheelbase", cfg.vehicle.wheelbase},
                  {"v_min", cfg.vehicle.v_min},
                  {"accel", {b.lo(kAccel), b.hi(kAccel)}},
                  {"steer", {b.lo(kSteer), b.hi(kSteer)}}};
  const auto& c = cfg.cost;
  json obstacles = json::array();
  for (const auto& o : c.obstacles)
    obstacles.push_back({{"x", o.x}, {"y", o.y}, {"radius", o.radius}});
  j["cost"] = {{"v_ref", c.v_ref},         {"w_speed", c.w_speed},
               {"w_accel", c.w_accel},     {"w_steer", c.w_steer},
               {"w_heading", c.w_heading}, {"w_collision", c.w_collision},
               {"d_safe", c.d_safe},       {"w_road", c.w_road},
               {"road_y", {c.road_y_lo, c.road_y_hi}},
               {"w_obstacle", c.w_obstacle}, {"obstacles", obstacles},
               {"kappa", c.kappa}};
  json agents = json::array();
  for (const auto& a : cfg.agents) {
    json opts = json::array();
    for (const auto& o : a.options)
      opts.push_back({{"name", o.name}, {"region", region_json(o.region)},
                      {"weight", o.weight}});
    agents.push_back({{"x0", {a.x0(0), a.x0(1), a.x0(2), a.x0(3)}},
                      {"planner", to_string(a.planner)},
                      {"options", opts}});
  }
  j["agents"] = agents;
  const auto& il = cfg.ilq;
  j["ilq"] = {{"horizon", il.horizon},
              {"max_iters", il.max_iters},
              {"tol", il.tol},
              {"warm_start", il.warm_start},
              {"parallel", il.parallel},
              {"ls_factor", il.ls_factor},
              {"ls_max_halvings", il.ls_max_halvings},
              {"trust_radius", il.trust_radius},
              {"divergence_bound", il.divergence_bound}};
  const auto& op = cfg.opinion;
  j["opinion"] = {{"epsilon", op.epsilon},
                  {"damping", op.damping},
                  {"attention_damping", op.attention_damping},
                  {"attention_scale", op.attention_scale},
                  {"lambda0", op.lambda0},
                  {"value_drive", op.value_drive}};
  const auto& p = cfg.planner;
  j["planner"] = {{"qp_tol", p.qp_tol},         {"qp_max_iters", p.qp_max_iters},
                  {"l1_starts", p.l1_starts},   {"l1_fd_step", p.l1_fd_step},
                  {"l1_max_iters", p.l1_max_iters}, {"l1_tol", p.l1_tol}};
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig cfg;
  ObjectReader root(j, "");
  root.get("name", cfg.name);

  if (const json* s = root.child("sim")) {
    ObjectReader r(*s, "sim");
    r.get("dt", cfg.sim.dt);
    r.get("steps", cfg.sim.steps);
    r.get("seed", cfg.sim.seed);
    r.finish();
  }
  if (const json* v = root.child("vehicle")) {
    ObjectReader r(*v, "vehicle");
    r.get("wheelbase", cfg.vehicle.wheelbase);
    r.get("v_min", cfg.vehicle.v_min);
    if (const json* a = r.child("accel")) {
      const auto lim = read_fixed<2>(*a, "vehicle.accel");
      cfg.vehicle.box.lo(kAccel) = lim(0);
      cfg.vehicle.box.hi(kAccel) = lim(1);
    }
    if (const json* s = r.child("steer")) {
      const auto lim = read_fixed<2>(*s, "vehicle.steer");
      cfg.vehicle.box.lo(kSteer) = lim(0);
      cfg.vehicle.box.hi(kSteer) = lim(1);
    }
    r.finish();
  }
  if (const json* c = root.child("cost")) {
    ObjectReader r(*c, "cost");
    auto& cc = cfg.cost;
    r.get("v_ref", cc.v_ref);
    r.get("w_speed", cc.w_speed);
    r.get("w_accel", cc.w_accel);
    r.get("w_steer", cc.w_steer);
    r.get("w_heading", cc.w_heading);
    r.get("w_collision", cc.w_collision);
    r.get("d_safe", cc.d_safe);
    r.get("w_road", cc.w_road);
    if (const json* y = r.child("road_y")) {
      const auto band = read_fixed<2>(*y, "cost.road_y");
      cc.road_y_lo = band(0);
      cc.road_y_hi = band(1);
    }
    r.get("w_obstacle", cc.w_obstacle);
    if (const json* obs = r.child("obstacles")) {
      if (!obs->is_array()) throw ConfigError("config key 'cost.obstacles' must be an array");
      cc.obstacles.clear();
      for (std::size_t k = 0; k < obs->size(); ++k) {
        ObjectReader o((*obs)[k], "cost.obstacles." + std::to_string(k));
        DiscObstacle d;
        o.get("x", d.x);
        o.get("y", d.y);
        o.get("radius", d.radius);
        o.finish();
        cc.obstacles.push_back(d);
      }
    }
    r.get("kappa", cc.kappa);
    r.finish();
  }
  if (const json* agents = root.child("agents")) {
    if (!agents->is_array()) throw ConfigError("config key 'agents' must be an array");
    for (std::size_t i = 0; i < agents->size(); ++i) {
      const std::string base = "agents." + std::to_string(i);
      ObjectReader r((*agents)[i], base);
      AgentConfig a;
      if (const json* x0 = r.child("x0")) a.x0 = read_fixed<4>(*x0, base + ".x0");
      std::string planner = "L0";
      r.get("planner", planner);
      a.planner = planner_from_string(planner, base + ".planner");
      if (const json* opts = r.child("options")) {
        if (!opts->is_array())
          throw ConfigError("config key '" + base + ".options' must be an array");
        for (std::size_t k = 0; k < opts->size(); ++k) {
          const std::string ok = base + ".options." + std::to_string(k);
          ObjectReader o((*opts)[k], ok);
          OptionSpec spec;
          spec.name = "option" + std::to_string(k + 1);
          o.get("name", spec.name);
          o.get("weight", spec.weight);
          if (const json* reg = o.child("region")) {
            const auto v = read_fixed<4>(*reg, ok + ".region");
            spec.region = {v(0), v(1), v(2), v(3)};
          }
          o.finish();
          a.options.push_back(spec);
        }
      }
      r.finish();
      cfg.agents.push_back(std::move(a));
    }
  }
  if (const json* il = root.child("ilq")) {
    ObjectReader r(*il, "ilq");
    r.get("horizon", cfg.ilq.horizon);
    r.get("max_iters", cfg.ilq.max_iters);
    r.get("tol", cfg.ilq.tol);
    r.get("warm_start", cfg.ilq.warm_start);
    r.get("parallel", cfg.ilq.parallel);
    r.get("ls_factor", cfg.ilq.ls_factor);
    r.get("ls_max_halvings", cfg.ilq.ls_max_halvings);
    r.get("trust_radius", cfg.ilq.trust_radius);
    r.get("divergence_bound", cfg.ilq.divergence_bound);
    r.finish();
  }
  if (const json* op = root.child("opinion")) {
    ObjectReader r(*op, "opinion");
    r.get("epsilon", cfg.opinion.epsilon);
    r.get("damping", cfg.opinion.damping);
    r.get("attention_damping", cfg.opinion.attention_damping);
    r.get("attention_scale", cfg.opinion.attention_scale);
    r.get("lambda0", cfg.opinion.lambda0);
    r.get("value_drive", cfg.opinion.value_drive);
    r.finish();
  }
  if (const json* p = root.child("planner")) {
    ObjectReader r(*p, "planner");
    r.get("qp_tol", cfg.planner.qp_tol);
    r.get("qp_max_iters", cfg.planner.qp_max_iters);
    r.get("l1_starts", cfg.planner.l1_starts);
    r.get("l1_fd_step", cfg.planner.l1_fd_step);
    r.get("l1_max_iters", cfg.planner.l1_max_iters);
    r.get("l1_tol", cfg.planner.l1_tol);
    r.finish();
  }
  root.finish();
  validate(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

ScenarioConfig apply_overrides(const ScenarioConfig& cfg,
                               const std::vector<std::string>& overrides) {
  json j = to_json(cfg);
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + ov + "' must look like key=value");
    const std::string key = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);

    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (node->is_array()) {
        std::size_t idx = 0;
        try {
          idx = std::stoul(part);
        } catch (const std::exception&) {
          throw ConfigError("unknown config key '" + key + "'");
        }
        if (idx >= node->size()) throw ConfigError("unknown config key '" + key + "'");
        node = &(*node)[idx];
      } else if (node->is_object() && node->contains(part)) {
        node = &(*node)[part];
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;  // bare strings such as L1
    }
    *node = value;
  }
  return scenario_from_json(j);
}

ScenarioConfig toll_scenario(bool heterogeneous, bool car1_l1) {
  ScenarioConfig cfg;
  cfg.name = heterogeneous ? (car1_l1 ? "toll_heterogeneous_l1" : "toll_heterogeneous_l0")
                           : "toll_homogeneous";

  // Road band y in [0, 7] with the lane divider at y = 3.5. The toll island
  // splits the plaza into booth 1 (y > 3.5) and booth 2 (y < 3.5).
  cfg.cost.road_y_lo = 0.5;
  cfg.cost.road_y_hi = 6.5;
  for (double x : {30.0, 32.0, 34.0})
    cfg.cost.obstacles.push_back({x, 3.5, 1.5});

  // Booth regions open a few metres before the island.
  const TargetRegion booth1{25.0, 60.0, 4.25, 6.25};
  const TargetRegion booth2{25.0, 60.0, 0.75, 2.75};
  cfg.cost.kappa = 2.0;
  cfg.ilq.horizon = 12;

  const double w11 = heterogeneous ? 40.0 : 15.0;
  const double w12 = heterogeneous ? 50.0 : 15.0;
  const double w21 = heterogeneous ? 50.0 : 15.0;
  const double w22 = heterogeneous ? 40.0 : 15.0;

  AgentConfig car1;
  car1.x0 << 0.0, 5.0, 0.0, 3.0;
  car1.options = {{"booth1", booth1, w11}, {"booth2", booth2, w12}};
  car1.planner = car1_l1 ? PlannerKind::kL1 : PlannerKind::kL0;

  AgentConfig car2;
  car2.x0 << 5.0, 2.0, 0.0, 3.0;
  car2.options = {{"booth1", booth1, w21}, {"booth2", booth2, w22}};

  cfg.agents = {car1, car2};
  return cfg;
}

}  // namespace ginod
