#include "ginod/ilq.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

namespace ginod {
namespace {

constexpr int kMaxRegularization = 6;

using Controls = std::vector<std::vector<VectorXd>>;  // [t][player]

std::vector<ControlInput> to_inputs(const std::vector<VectorXd>& u) {
  std::vector<ControlInput> out;
  out.reserve(u.size());
  for (const auto& ui : u) {
    if (ui.size() != kAgentControlDim)
      throw DimensionError("scenario game control must have 2 entries");
    out.emplace_back(ui);
  }
  return out;
}

double max_abs_change(const std::vector<VectorXd>& a, const std::vector<VectorXd>& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t)
    m = std::max(m, (a[t] - b[t]).lpNorm<Eigen::Infinity>());
  return m;
}

bool trajectory_ok(const std::vector<VectorXd>& xs, double bound) {
  for (const auto& x : xs)
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > bound) return false;
  return true;
}

struct Nominal {
  std::vector<VectorXd> xs;
  Controls us;
  std::vector<double> costs;
  double total() const { return std::accumulate(costs.begin(), costs.end(), 0.0); }
};

std::string describe_trace(const std::vector<IlqIterate>& trace) {
  std::ostringstream os;
  for (const auto& it : trace) {
    os << " [iter " << it.iteration << " step " << it.step << " change "
       << it.max_change << "]";
  }
  return os.str();
}

LqSolution solve_around(const Game& game, const Nominal& nom) {
  const int H = static_cast<int>(nom.us.size());
  const int N = game.num_players();
  std::vector<LinearizedDynamics> lin;
  lin.reserve(H);
  std::vector<std::vector<QuadratizedCost>> quad(H + 1);
  for (int t = 0; t < H; ++t) {
    lin.push_back(game.linearize(nom.xs[t], nom.us[t]));
    for (int i = 0; i < N; ++i) quad[t].push_back(game.quadratize(i, nom.xs[t], nom.us[t]));
  }
  for (int i = 0; i < N; ++i) quad[H].push_back(game.quadratize_terminal(i, nom.xs[H]));
  return solve_lq_game(lin, quad);
}

// Closed-loop rollout of u = u_bar + K dx + step * kappa.
Nominal apply_policy(const Game& game, const VectorXd& x0, const Nominal& nom,
                     const LqSolution& lq, double step) {
  const int H = static_cast<int>(nom.us.size());
  const int N = game.num_players();
  Nominal out;
  out.xs.reserve(H + 1);
  out.us.resize(H);
  out.xs.push_back(x0);
  for (int t = 0; t < H; ++t) {
    const VectorXd dx = out.xs[t] - nom.xs[t];
    out.us[t].resize(N);
    for (int i = 0; i < N; ++i)
      out.us[t][i] = game.project_control(
          i, nom.us[t][i] + lq.K[t][i] * dx + step * lq.kappa[t][i]);
    out.xs.push_back(game.step(out.xs[t], out.us[t]));
  }
  return out;
}

}  // namespace

VectorXd SubgamePolicy::control(int player, int t, const VectorXd& x) const {
  t = std::clamp(t, 0, horizon() - 1);
  return u_nominal[t][player] + K[t][player] * (x - x_nominal[t]) + kappa[t][player];
}

double eval_value(const SubgameValue& val, int player, const VectorXd& x, int t) {
  if (t < 0 || t > val.horizon())
    throw DimensionError("eval_value: step " + std::to_string(t) + " outside horizon");
  const VectorXd dx = x - val.x_nominal[t];
  return 0.5 * dx.dot(val.Z[t][player] * dx) + dx.dot(val.zeta[t][player]) +
         val.v[t][player];
}

LqSolution solve_lq_game(std::span<const LinearizedDynamics> lin,
                         const std::vector<std::vector<QuadratizedCost>>& quad) {
  const int H = static_cast<int>(lin.size());
  if (H < 1) throw DimensionError("solve_lq_game: horizon must be at least 1");
  if (static_cast<int>(quad.size()) != H + 1)
    throw DimensionError("solve_lq_game: need horizon + 1 cost rows");
  const int N = static_cast<int>(quad[0].size());
  const int n = static_cast<int>(lin[0].A.rows());

  std::vector<int> nu(N), off(N + 1, 0);
  for (int i = 0; i < N; ++i) {
    nu[i] = static_cast<int>(lin[0].B.at(i).cols());
    off[i + 1] = off[i] + nu[i];
  }
  const int m = off[N];

  LqSolution sol;
  sol.K.assign(H, std::vector<MatrixXd>(N));
  sol.kappa.assign(H, std::vector<VectorXd>(N));
  sol.Z.assign(H + 1, std::vector<MatrixXd>(N));
  sol.zeta.assign(H + 1, std::vector<VectorXd>(N));
  sol.n.assign(H + 1, std::vector<double>(N));

  for (int i = 0; i < N; ++i) {
    sol.Z[H][i] = quad[H][i].Q;
    sol.zeta[H][i] = quad[H][i].q;
    sol.n[H][i] = quad[H][i].c0;
  }

  for (int t = H - 1; t >= 0; --t) {
    const auto& A = lin[t].A;
    const auto& B = lin[t].B;
    const VectorXd c =
        lin[t].affine.size() == n ? lin[t].affine : VectorXd::Zero(n).eval();

    MatrixXd S(m, m);
    MatrixXd rhs(m, n + 1);
    for (int i = 0; i < N; ++i) {
      const MatrixXd& Zi = sol.Z[t + 1][i];
      const MatrixXd BtZ = B[i].transpose() * Zi;
      for (int j = 0; j < N; ++j) {
        S.block(off[i], off[j], nu[i], nu[j]) = BtZ * B[j];
      }
      S.block(off[i], off[i], nu[i], nu[i]) += quad[t][i].R[i];
      rhs.block(off[i], 0, nu[i], n) = BtZ * A;
      rhs.block(off[i], n, nu[i], 1) =
          B[i].transpose() * (sol.zeta[t + 1][i] + Zi * c) + quad[t][i].r[i];
    }

    Eigen::FullPivLU<MatrixXd> lu(S);
    // Near-singular coupled systems get a small escalating diagonal shift.
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    for (int k = 0; k < kMaxRegularization && !lu.isInvertible(); ++k)
      lu.compute(S + scale * 1e-9 * std::pow(10.0, k) * MatrixXd::Identity(m, m));
    if (!lu.isInvertible())
      throw SolverError("singular coupled-gain system at step " + std::to_string(t));
    const MatrixXd X = lu.solve(rhs);
    if (!X.allFinite())
      throw SolverError("non-finite Riccati solution at step " + std::to_string(t));

    std::vector<MatrixXd> P(N);
    std::vector<VectorXd> alpha(N);
    MatrixXd F = A;
    VectorXd beta = c;
    for (int j = 0; j < N; ++j) {
      P[j] = X.block(off[j], 0, nu[j], n);
      alpha[j] = X.block(off[j], n, nu[j], 1);
      F -= B[j] * P[j];
      beta -= B[j] * alpha[j];
      sol.K[t][j] = -P[j];
      sol.kappa[t][j] = -alpha[j];
    }

    for (int i = 0; i < N; ++i) {
      const MatrixXd& Zn = sol.Z[t + 1][i];
      const VectorXd& zn = sol.zeta[t + 1][i];
      const auto& qc = quad[t][i];
      MatrixXd Z = qc.Q + F.transpose() * Zn * F;
      VectorXd zeta = qc.q + F.transpose() * (zn + Zn * beta);
      double nc = qc.c0 + 0.5 * beta.dot(Zn * beta) + zn.dot(beta) + sol.n[t + 1][i];
      for (int j = 0; j < N; ++j) {
        const MatrixXd& Rij = qc.R[j];
        const VectorXd& rij = qc.r[j];
        Z += P[j].transpose() * Rij * P[j];
        zeta += P[j].transpose() * (Rij * alpha[j] - rij);
        nc += 0.5 * alpha[j].dot(Rij * alpha[j]) - rij.dot(alpha[j]);
      }
      sol.Z[t][i] = 0.5 * (Z + Z.transpose());
      sol.zeta[t][i] = zeta;
      sol.n[t][i] = nc;
    }
  }
  return sol;
}

ScenarioGame::ScenarioGame(const ScenarioConfig& cfg, std::vector<int> theta_tuple)
    : cfg_(&cfg), options_(cfg.options()), theta_(std::move(theta_tuple)) {
  if (static_cast<int>(theta_.size()) != cfg.num_agents())
    throw DimensionError("theta tuple size does not match the number of agents");
  for (int i = 0; i < cfg.num_agents(); ++i) {
    if (theta_[i] < 0 || theta_[i] >= static_cast<int>(options_[i].size()))
      throw ConfigError("unknown option id " + std::to_string(theta_[i]) +
                        " for agent " + std::to_string(i));
  }
}

int ScenarioGame::num_players() const { return cfg_->num_agents(); }
int ScenarioGame::state_dim() const { return kAgentStateDim * cfg_->num_agents(); }

VectorXd ScenarioGame::step(const VectorXd& x, const std::vector<VectorXd>& u) const {
  const auto inputs = to_inputs(u);
  return step_joint(x, inputs, cfg_->sim.dt, cfg_->vehicle);
}

LinearizedDynamics ScenarioGame::linearize(const VectorXd& x,
                                           const std::vector<VectorXd>& u) const {
  const auto inputs = to_inputs(u);
  return linearize_joint(x, inputs, cfg_->sim.dt, cfg_->vehicle);
}

QuadratizedCost ScenarioGame::quadratize(int player, const VectorXd& x,
                                         const std::vector<VectorXd>& u) const {
  const auto inputs = to_inputs(u);
  return ginod::quadratize(player, x, inputs, theta_, options_, cfg_->cost);
}

QuadratizedCost ScenarioGame::quadratize_terminal(int player, const VectorXd& x) const {
  return ginod::quadratize_terminal(player, x, theta_, options_, cfg_->cost,
                                    num_players());
}

double ScenarioGame::stage_cost(int player, const VectorXd& x,
                                const std::vector<VectorXd>& u) const {
  return stage_cost_independent(player, x, ControlInput(u[player]), cfg_->cost) +
         stage_cost_dependent(player, x, theta_[player], options_[player], true,
                              cfg_->cost.kappa);
}

double ScenarioGame::terminal_cost(int player, const VectorXd& x) const {
  return stage_cost_independent(player, x, ControlInput::Zero(), cfg_->cost) +
         stage_cost_dependent(player, x, theta_[player], options_[player], true,
                              cfg_->cost.kappa);
}

VectorXd ScenarioGame::project_control(int, const VectorXd& u) const {
  return cfg_->vehicle.box.project(u);
}

std::vector<VectorXd> rollout(const Game& game, const VectorXd& x0, const Controls& u) {
  std::vector<VectorXd> xs;
  xs.reserve(u.size() + 1);
  xs.push_back(x0);
  for (const auto& ut : u) xs.push_back(game.step(xs.back(), ut));
  return xs;
}

std::vector<double> trajectory_costs(const Game& game, const std::vector<VectorXd>& xs,
                                     const Controls& us) {
  const int N = game.num_players();
  std::vector<double> costs(N, 0.0);
  for (int i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < us.size(); ++t) costs[i] += game.stage_cost(i, xs[t], us[t]);
    costs[i] += game.terminal_cost(i, xs.back());
  }
  return costs;
}

IlqResult ilq_solve(const Game& game, const VectorXd& x0, const IlqOptions& opts,
                    const Controls* initial_controls) {
  if (!x0.allFinite()) throw SolverError("ilq_solve: non-finite initial state");
  if (opts.horizon < 1) throw DimensionError("ilq_solve: horizon must be at least 1");
  const int H = opts.horizon;
  const int N = game.num_players();

  Nominal nom;
  if (initial_controls) {
    if (static_cast<int>(initial_controls->size()) != H)
      throw DimensionError("ilq_solve: warm start has the wrong horizon");
    nom.us = *initial_controls;
  } else {
    nom.us.assign(H, std::vector<VectorXd>(N));
    for (auto& ut : nom.us)
      for (int i = 0; i < N; ++i) ut[i] = VectorXd::Zero(game.control_dim(i));
  }
  nom.xs = rollout(game, x0, nom.us);
  if (!trajectory_ok(nom.xs, opts.divergence_bound))
    throw SolverError("ilq_solve: initial rollout diverged");
  nom.costs = trajectory_costs(game, nom.xs, nom.us);

  IlqResult result;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const LqSolution lq = solve_around(game, nom);

    std::optional<Nominal> accepted;
    std::optional<Nominal> within_trust;
    double accepted_step = 0.0;
    double trust_step = 0.0;
    double step = 1.0;
    Nominal last;
    bool have_last = false;
    for (int k = 0; k <= opts.ls_max_halvings; ++k, step *= opts.ls_factor) {
      Nominal cand = apply_policy(game, x0, nom, lq, step);
      if (!trajectory_ok(cand.xs, opts.divergence_bound)) continue;
      cand.costs = trajectory_costs(game, cand.xs, cand.us);
      if (!std::isfinite(cand.total())) continue;
      const double change = max_abs_change(cand.xs, nom.xs);
      if (cand.total() <= nom.total() + 1e-12 * std::abs(nom.total())) {
        accepted = std::move(cand);
        accepted_step = step;
        break;
      }
      if (!within_trust && change <= opts.trust_radius) {
        within_trust = cand;
        trust_step = step;
      }
      last = std::move(cand);
      have_last = true;
    }
    if (!accepted && within_trust) {
      accepted = std::move(within_trust);
      accepted_step = trust_step;
    }
    if (!accepted && have_last) {
      accepted = std::move(last);
      accepted_step = step / opts.ls_factor;
    }
    if (!accepted) {
      result.trace.push_back({it, 0.0, std::numeric_limits<double>::infinity(), nom.costs});
      throw SolverError("ilq_solve diverged at iteration " + std::to_string(it) + ":" +
                        describe_trace(result.trace));
    }

    const double change = max_abs_change(accepted->xs, nom.xs);
    result.trace.push_back({it, accepted_step, change, accepted->costs});
    nom = std::move(*accepted);
    result.iterations = it;
    if (change < opts.tol) {
      result.converged = true;
      break;
    }
  }

  // Final LQ model around the returned nominal.
  const LqSolution lq = solve_around(game, nom);
  auto& pol = result.policy;
  pol.x_nominal = nom.xs;
  pol.u_nominal = nom.us;
  pol.K = lq.K;
  pol.kappa = lq.kappa;

  auto& val = result.value;
  val.x_nominal = nom.xs;
  val.Z = lq.Z;
  val.zeta = lq.zeta;
  val.v.assign(H + 1, std::vector<double>(N, 0.0));
  for (int i = 0; i < N; ++i) {
    double acc = game.terminal_cost(i, nom.xs[H]);
    val.v[H][i] = acc;
    for (int t = H - 1; t >= 0; --t) {
      acc += game.stage_cost(i, nom.xs[t], nom.us[t]);
      val.v[t][i] = acc;
    }
  }
  return result;
}

IlqResult ilq_solve(const VectorXd& x0, std::span<const int> theta_tuple,
                    const ScenarioConfig& scenario, int horizon, int max_iters, double tol) {
  ScenarioGame game(scenario, std::vector<int>(theta_tuple.begin(), theta_tuple.end()));
  IlqOptions opts = IlqOptions::from(scenario.ilq);
  opts.horizon = horizon;
  opts.max_iters = max_iters;
  opts.tol = tol;
  return ilq_solve(game, x0, opts);
}

Controls shifted_warm_start(const Game& game, const SubgamePolicy& previous,
                            const VectorXd& x0) {
  const int H = previous.horizon();
  const int N = game.num_players();
  Controls us(H, std::vector<VectorXd>(N));
  VectorXd x = x0;
  for (int t = 0; t < H; ++t) {
    const int src = std::min(t + 1, H - 1);
    for (int i = 0; i < N; ++i) {
      // Beyond the old horizon keep the last nominal control open loop.
      us[t][i] = (t + 1 < H) ? previous.control(i, src, x)
                             : VectorXd(previous.u_nominal[src][i]);
    }
    x = game.step(x, us[t]);
  }
  return us;
}

int tuple_count(std::span<const int> option_counts) {
  int total = 1;
  for (int c : option_counts) total *= c;
  return total;
}

SubgameBank::SubgameBank(std::vector<int> option_counts)
    : counts_(std::move(option_counts)), entries_(tuple_count(counts_)) {}

int SubgameBank::index_of(std::span<const int> tuple) const {
  if (tuple.size() != counts_.size())
    throw DimensionError("subgame tuple has the wrong number of entries");
  int idx = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k) {
    if (tuple[k] < 0 || tuple[k] >= counts_[k])
      throw ConfigError("subgame tuple entry " + std::to_string(k) + " out of range");
    idx = idx * counts_[k] + tuple[k];
  }
  return idx;
}

std::vector<int> SubgameBank::tuple_of(int index) const {
  std::vector<int> tuple(counts_.size());
  for (int k = static_cast<int>(counts_.size()) - 1; k >= 0; --k) {
    tuple[k] = index % counts_[k];
    index /= counts_[k];
  }
  return tuple;
}

bool SubgameBank::has(std::span<const int> tuple) const {
  return entries_[index_of(tuple)].has_value();
}

const SubgameEntry& SubgameBank::at(std::span<const int> tuple) const {
  const auto& e = entries_[index_of(tuple)];
  if (!e) {
    std::string s;
    for (int v : tuple) s += std::to_string(v) + ",";
    throw ConfigError("subgame bank has no entry for tuple (" + s + ")");
  }
  return *e;
}

const SubgameEntry& SubgameBank::at_index(int index) const {
  return at(tuple_of(index));
}

SubgameEntry& SubgameBank::at_index(int index) {
  auto& e = entries_.at(index);
  if (!e) throw ConfigError("subgame bank entry " + std::to_string(index) + " missing");
  return *e;
}

void SubgameBank::set(std::span<const int> tuple, IlqResult result) {
  entries_[index_of(tuple)] =
      SubgameEntry{std::vector<int>(tuple.begin(), tuple.end()), std::move(result)};
}

bool SubgameBank::complete() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const auto& e) { return e.has_value(); });
}

SubgameBank solve_all_subgames(const VectorXd& x0, const ScenarioConfig& scenario,
                               const SubgameBank* previous) {
  SubgameBank bank(scenario.option_counts());
  const int count = tuple_count(scenario.option_counts());
  const IlqOptions opts = IlqOptions::from(scenario.ilq);

  auto solve_one = [&](int index) -> IlqResult {
    const std::vector<int> tuple = bank.tuple_of(index);
    try {
      ScenarioGame game(scenario, tuple);
      if (previous && scenario.ilq.warm_start && previous->has(tuple)) {
        const auto& prev = previous->at(tuple).result.policy;
        if (prev.horizon() == opts.horizon) {
          const auto warm = shifted_warm_start(game, prev, x0);
          return ilq_solve(game, x0, opts, &warm);
        }
      }
      return ilq_solve(game, x0, opts);
    } catch (const Error& e) {
      std::string s;
      for (std::size_t k = 0; k < tuple.size(); ++k)
        s += (k ? "," : "") + std::to_string(tuple[k] + 1);
      throw SolverError("subgame (" + s + "): " + e.what());
    }
  };

  std::vector<IlqResult> results(count);
  if (scenario.ilq.parallel && count > 1) {
    std::vector<std::future<IlqResult>> futures;
    futures.reserve(count);
    for (int k = 0; k < count; ++k)
      futures.push_back(std::async(std::launch::async, solve_one, k));
    for (int k = 0; k < count; ++k) results[k] = futures[k].get();
  } else {
    for (int k = 0; k < count; ++k) results[k] = solve_one(k);
  }
  for (int k = 0; k < count; ++k) bank.set(bank.tuple_of(k), std::move(results[k]));
  return bank;
}

}  // namespace ginod
