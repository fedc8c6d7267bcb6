// Command-line front end: run, subgame, stability, validate, version.
// Exit codes: 0 ok, 1 solver error, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ginod/ilq.hpp"
#include "ginod/scenario.hpp"
#include "ginod/sim.hpp"
#include "ginod/stability.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kSolver = 1, kConfig = 2 };

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

json complex_list(const ginod::Spectrum& s) {
  json out = json::array();
  for (const auto& e : s) out.push_back({e.real(), e.imag()});
  return out;
}

Eigen::Matrix2d read_2x2(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ginod::ConfigError("values file is missing '" + key + "'");
  const json& m = j.at(key);
  if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 2 ||
      !m[1].is_array() || m[1].size() != 2)
    throw ginod::ConfigError("'" + key + "' must be a 2x2 array");
  Eigen::Matrix2d M;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      if (!m[a][b].is_number()) throw ginod::ConfigError("'" + key + "' entries must be numbers");
      M(a, b) = m[a][b].get<double>();
    }
  return M;
}

Eigen::VectorXd read_opinion(const json& j, const std::string& key) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  if (!j.contains(key)) return z;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ginod::ConfigError("'" + key + "' must be an array of two numbers");
  z << v[0].get<double>(), v[1].get<double>();
  return z;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ginod::ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ginod::ConfigError("cannot parse '" + path + "': " + e.what());
  }
}

int cmd_run(const std::string& config, const std::string& out_dir,
            const std::vector<std::string>& overrides) {
  const ginod::ScenarioConfig cfg =
      ginod::apply_overrides(ginod::load_scenario(config), overrides);
  ginod::validate(cfg);
  std::filesystem::create_directories(out_dir);

  ginod::TrajectoryLog log;
  int code = kOk;
  std::string error;
  try {
    ginod::run(cfg, log);
  } catch (const ginod::ConfigError& e) {
    code = kConfig;
    error = e.what();
  } catch (const ginod::Error& e) {
    code = kSolver;
    error = e.what();
  }

  const auto csv_path = std::filesystem::path(out_dir) / "trajectory.csv";
  const auto meta_path = std::filesystem::path(out_dir) / "metadata.json";
  std::ofstream csv(csv_path);
  ginod::write_csv(log, cfg, csv);
  json meta = ginod::metadata(log, cfg);
  meta["status"] = code == kOk ? "ok" : "error";
  if (code != kOk) meta["error"] = error;
  std::ofstream(meta_path) << meta.dump(2) << '\n';
  if (!csv) throw ginod::ConfigError("cannot write '" + csv_path.string() + "'");

  if (code != kOk) {
    std::cerr << "error: " << error << " (partial log written)\n";
    return code;
  }
  std::cerr << "wrote " << log.rows.size() << " rows to " << csv_path.string() << '\n';
  std::cout << csv_path.string() << '\n' << meta_path.string() << '\n';
  return kOk;
}

int cmd_subgame(const std::string& config, const std::string& tuple_text,
                const std::vector<std::string>& overrides) {
  const ginod::ScenarioConfig cfg =
      ginod::apply_overrides(ginod::load_scenario(config), overrides);
  ginod::validate(cfg);
  std::vector<int> tuple;
  std::stringstream ss(tuple_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size()) throw std::invalid_argument(item);
      tuple.push_back(v - 1);
    } catch (const std::exception&) {
      throw ginod::ConfigError("--tuple entries must be integers, got '" + item + "'");
    }
  }
  if (static_cast<int>(tuple.size()) != cfg.num_agents())
    throw ginod::ConfigError("--tuple needs one option id per agent");

  const ginod::IlqResult r =
      ginod::ilq_solve(cfg.initial_state(), tuple, cfg, cfg.ilq.horizon, cfg.ilq.max_iters,
                       cfg.ilq.tol);
  json out;
  out["tuple"] = tuple_text;
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  json values = json::array();
  for (int i = 0; i < cfg.num_agents(); ++i) values.push_back(r.value.v[0][i]);
  out["values"] = values;
  json traj = json::array();
  for (const auto& x : r.policy.x_nominal) traj.push_back(to_vec(x));
  out["x_nominal"] = traj;
  json ctrl = json::array();
  for (const auto& ut : r.policy.u_nominal) {
    json row = json::array();
    for (const auto& ui : ut) row.push_back(to_vec(ui));
    ctrl.push_back(row);
  }
  out["u_nominal"] = ctrl;
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_stability(const std::string& path, double d, std::optional<double> lambda,
                  std::optional<double> poi, double m, double rho) {
  const json j = read_json_file(path);
  const ginod::ValueTable table = ginod::table_2x2(read_2x2(j, "V1"), read_2x2(j, "V2"));
  const Eigen::VectorXd z1 = read_opinion(j, "z1");
  const Eigen::VectorXd z2 = read_opinion(j, "z2");
  double lam = 1.0;
  if (lambda) {
    lam = *lambda;
  } else if (poi) {
    lam = ginod::attention_steady_state(*poi, m, rho);
  }
  const ginod::StabilityReport r = ginod::stability_report(z1, z2, table, d, lam);

  json out;
  out["d"] = r.d;
  out["lambda"] = r.lambda;
  out["a1"] = r.gamma.a1;
  out["a2"] = r.gamma.a2;
  out["b1"] = r.gamma.b1;
  out["b2"] = r.gamma.b2;
  json H = json::array();
  const Eigen::Matrix4d Hs = r.gamma.system_matrix();
  for (int a = 0; a < 4; ++a) H.push_back(std::vector<double>{Hs(a, 0), Hs(a, 1), Hs(a, 2), Hs(a, 3)});
  out["H"] = H;
  out["H_is_zero"] = Hs.cwiseAbs().maxCoeff() <= ginod::kTieTolerance;
  out["spectrum"] = complex_list(r.spectrum);
  out["max_real_part"] = r.max_real_part;
  out["verdict"] = ginod::to_string(r.verdict);
  out["theorem1"] = {{"condition_holds", r.theorem1.condition_holds},
                     {"predicted_unstable", r.theorem1.predicted_unstable}};
  out["theorem2"] = {{"orderings_hold", r.theorem2.orderings_hold},
                     {"hypotheses_hold", r.theorem2.hypotheses_hold},
                     {"predicted_stable", r.theorem2.predicted_stable},
                     {"l1", r.theorem2.l1 + 1},
                     {"l2", r.theorem2.l2 + 1}};
  out["corollary1"] = r.corollary1;
  out["V_a"] = r.V_a;
  out["V_b"] = r.V_b;
  out["V_prime"] = std::isfinite(r.V_prime) ? json(r.V_prime) : json(nullptr);
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_validate(const std::string& config, const std::vector<std::string>& overrides) {
  const ginod::ScenarioConfig cfg =
      ginod::apply_overrides(ginod::load_scenario(config), overrides);
  ginod::validate(cfg);
  std::cout << "ok\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GiNOD subgame solver and receding-horizon simulator"};
  app.require_subcommand(1);

  std::string config, out_dir, values_path, tuple;
  std::vector<std::string> overrides;
  double d = 0.2, m = 2.0, rho = 5.0;
  std::optional<double> lambda, poi;

  auto* run = app.add_subcommand("run", "simulate a scenario and write trajectory.csv");
  run->add_option("--config", config, "scenario JSON")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--set", overrides, "override key=value (repeatable)");

  auto* sub = app.add_subcommand("subgame", "solve one subgame at the initial state");
  sub->add_option("--config", config, "scenario JSON")->required();
  sub->add_option("--tuple", tuple, "1-based option ids, e.g. 1,2")->required();
  sub->add_option("--set", overrides, "override key=value (repeatable)");

  auto* stab = app.add_subcommand("stability", "stability report for a 2x2x2 value table");
  stab->add_option("--values", values_path, "JSON with V1, V2 and optional z1, z2")
      ->required();
  stab->add_option("--d", d, "opinion damping");
  stab->add_option("--lambda", lambda, "attention");
  stab->add_option("--poi", poi, "use the steady-state attention for this PoI");
  stab->add_option("--m", m, "attention damping");
  stab->add_option("--rho", rho, "attention scale");

  auto* val = app.add_subcommand("validate", "check a scenario config");
  val->add_option("--config", config, "scenario JSON")->required();
  val->add_option("--set", overrides, "override key=value (repeatable)");

  auto* ver = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config, out_dir, overrides);
    if (*sub) return cmd_subgame(config, tuple, overrides);
    if (*stab) return cmd_stability(values_path, d, lambda, poi, m, rho);
    if (*val) return cmd_validate(config, overrides);
    if (*ver) {
      std::cout << "ginod " << kVersion << '\n';
      return kOk;
    }
  } catch (const ginod::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ginod::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ginod::Error& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  return kOk;
}
