#include "ginod/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ginod {
namespace {

double tuple_weight(const std::vector<Eigen::VectorXd>& s, const std::vector<int>& tuple) {
  double w = 1.0;
  for (std::size_t k = 0; k < tuple.size(); ++k) w *= s[k](tuple[k]);
  return w;
}

std::vector<Eigen::VectorXd> probabilities(const Opinions& z, const SubgameBank& bank) {
  if (static_cast<int>(z.size()) != bank.num_players())
    throw DimensionError("planner: opinions and subgame bank disagree on agents");
  std::vector<Eigen::VectorXd> s;
  for (int i = 0; i < bank.num_players(); ++i) {
    if (z[i].size() != bank.option_counts()[i])
      throw DimensionError("planner: opinion has the wrong number of options");
    s.push_back(softmax(z[i]));
  }
  return s;
}

// Control-dependent part of c_I as a quadratic in u: w_a a^2 + w_s d^2.
Eigen::Matrix2d control_cost_hessian(const CostConfig& cost) {
  return Eigen::Vector2d(2.0 * cost.w_accel, 2.0 * cost.w_steer).asDiagonal();
}

std::vector<ControlInput> feedback_controls(const SubgamePolicy& pol, int t,
                                            const Eigen::VectorXd& x) {
  std::vector<ControlInput> u;
  for (int j = 0; j < pol.num_players(); ++j) u.emplace_back(pol.control(j, t, x));
  return u;
}

}  // namespace

QPResult solve_qp(const QPProblem& qp, double tol, int max_iters,
                  std::vector<double>* history) {
  const int n = static_cast<int>(qp.q.size());
  if (qp.P.rows() != n || qp.P.cols() != n || qp.lo.size() != n || qp.hi.size() != n)
    throw DimensionError("solve_qp: inconsistent problem dimensions");
  if ((qp.lo.array() > qp.hi.array()).any()) throw ConfigError("solve_qp: empty box");
  const Eigen::MatrixXd P = 0.5 * (qp.P + qp.P.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  const double L = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, std::abs(L)))
    throw SolverError("solve_qp: P is not positive semidefinite");

  QPResult res;
  Eigen::VectorXd u = qp.project(Eigen::VectorXd::Zero(n));
  if (history) history->push_back(qp.objective(u));

  if (L <= 1e-14) {
    // Linear objective: minimize coordinate-wise.
    for (int k = 0; k < n; ++k) u(k) = qp.q(k) > 0.0 ? qp.lo(k) : (qp.q(k) < 0.0 ? qp.hi(k) : u(k));
    res.u = u;
    res.objective = qp.objective(u);
    res.converged = true;
    if (history) history->push_back(res.objective);
    return res;
  }

  for (int it = 1; it <= max_iters; ++it) {
    const Eigen::VectorXd next = qp.project(u - (P * u + qp.q) / L);
    const double pg = L * (next - u).norm();
    u = next;
    res.iterations = it;
    if (history) history->push_back(qp.objective(u));
    if (pg < tol) {
      res.converged = true;
      break;
    }
  }

  // Active-set refinement on the coordinates not pinned at a bound.
  const Eigen::VectorXd g = P * u + qp.q;
  std::vector<int> free;
  for (int k = 0; k < n; ++k) {
    const bool at_lo = u(k) <= qp.lo(k) + 1e-12 && g(k) > 0.0;
    const bool at_hi = u(k) >= qp.hi(k) - 1e-12 && g(k) < 0.0;
    if (!at_lo && !at_hi) free.push_back(k);
  }
  if (!free.empty()) {
    const int m = static_cast<int>(free.size());
    Eigen::MatrixXd Pff(m, m);
    Eigen::VectorXd rhs(m);
    for (int a = 0; a < m; ++a) {
      rhs(a) = -qp.q(free[a]);
      for (int k = 0; k < n; ++k)
        if (std::find(free.begin(), free.end(), k) == free.end())
          rhs(a) -= P(free[a], k) * u(k);
      for (int b = 0; b < m; ++b) Pff(a, b) = P(free[a], free[b]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Pff);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Eigen::VectorXd sol = ldlt.solve(rhs);
      if (sol.allFinite()) {
        Eigen::VectorXd cand = u;
        for (int a = 0; a < m; ++a) cand(free[a]) = sol(a);
        cand = qp.project(cand);
        if (qp.objective(cand) < qp.objective(u)) {
          u = cand;
          if (history) history->push_back(qp.objective(u));
        }
      }
    }
  }
  res.u = u;
  res.objective = qp.objective(u);
  return res;
}

QPProblem build_l0_objective(int player, const Eigen::VectorXd& x, const Opinions& z,
                             const SubgameBank& bank, const ScenarioConfig& cfg,
                             const ControlInput* u_ref, std::vector<double>* contributions) {
  if (player < 0 || player >= bank.num_players())
    throw DimensionError("build_l0_objective: invalid player id");
  const auto s = probabilities(z, bank);
  const ControlInput u0 = u_ref ? *u_ref : ControlInput::Zero();
  const double dt = cfg.sim.dt;

  // Expansion at u0: J(u0 + du) = J0 + g'du + 0.5 du' P du.
  const Eigen::Matrix2d Rc = control_cost_hessian(cfg.cost);
  Eigen::MatrixXd P = Rc;
  Eigen::VectorXd g = Rc * u0;
  double J0 = stage_cost_independent(player, x, u0, cfg.cost);
  if (contributions) contributions->assign(bank.size(), 0.0);

  for (int idx = 0; idx < bank.size(); ++idx) {
    const auto& entry = bank.at_index(idx);
    const double w = tuple_weight(s, entry.tuple);
    const auto& pol = entry.result.policy;
    const auto& val = entry.result.value;
    if (val.horizon() < 1) throw ConfigError("build_l0_objective: subgame horizon too short");

    std::vector<ControlInput> ubar;
    for (int j = 0; j < bank.num_players(); ++j) ubar.emplace_back(pol.u_nominal[0][j]);
    const LinearizedDynamics lin = linearize_joint(pol.x_nominal[0], ubar, dt, cfg.vehicle);
    const Eigen::VectorXd dx0 = x - pol.x_nominal[0];

    // dx+ = A dx0 + sum_j B^j du^j; opponents' du^j from their feedback policy.
    Eigen::VectorXd e = lin.A * dx0;
    if (lin.affine.size() == e.size()) e += lin.affine;
    for (int j = 0; j < bank.num_players(); ++j) {
      if (j == player) continue;
      e += lin.B[j] * (pol.K[0][j] * dx0 + pol.kappa[0][j]);
    }
    const Eigen::MatrixXd& Bi = lin.B[player];
    const Eigen::VectorXd dxp = e + Bi * (u0 - ubar[player]);
    const Eigen::MatrixXd& Z = val.Z[1][player];
    const Eigen::VectorXd& zeta = val.zeta[1][player];
    const double V = 0.5 * dxp.dot(Z * dxp) + zeta.dot(dxp) + val.v[1][player];

    P += w * Bi.transpose() * Z * Bi;
    g += w * Bi.transpose() * (Z * dxp + zeta);
    J0 += w * V;
    if (contributions) (*contributions)[idx] = w * V;
  }

  QPProblem qp;
  qp.P = 0.5 * (P + P.transpose());
  qp.q = g - qp.P * u0;
  qp.c = J0 - g.dot(u0) + 0.5 * u0.dot(qp.P * u0);
  qp.lo = cfg.vehicle.box.lo;
  qp.hi = cfg.vehicle.box.hi;
  return qp;
}

PlannerOutput l0_policy(int player, const Eigen::VectorXd& x, const Opinions& z,
                        const SubgameBank& bank, const ScenarioConfig& cfg) {
  PlannerOutput out;
  const QPProblem qp = build_l0_objective(player, x, z, bank, cfg);
  const QPResult r = solve_qp(qp, cfg.planner.qp_tol, cfg.planner.qp_max_iters);
  out.control = ControlInput(r.u);
  out.objective = r.objective;
  out.iterations = r.iterations;
  out.converged = r.converged;
  const ControlInput u = out.control;
  build_l0_objective(player, x, z, bank, cfg, &u, &out.contributions);
  return out;
}

L1Context make_l1_context(int player, const Eigen::VectorXd& x, const Opinions& z,
                          std::span<const double> lambda, const SubgameBank& bank,
                          const ScenarioConfig& cfg) {
  L1Context ctx;
  ctx.player = player;
  ctx.x = x;
  ctx.z = z;
  ctx.lambda.assign(lambda.begin(), lambda.end());
  ctx.bank = &bank;
  ctx.cfg = &cfg;
  ctx.opponents_l0.assign(bank.num_players(), ControlInput::Zero());
  for (int j = 0; j < bank.num_players(); ++j) {
    if (j == player) continue;
    ctx.opponents_l0[j] = l0_policy(j, x, z, bank, cfg).control;
  }
  return ctx;
}

namespace {

Eigen::VectorXd first_step(const L1Context& ctx, const ControlInput& u0) {
  std::vector<ControlInput> u = ctx.opponents_l0;
  u[ctx.player] = u0;
  return step_joint(ctx.x, u, ctx.cfg->sim.dt, ctx.cfg->vehicle);
}

Opinions opinion_step_at(const L1Context& ctx, const Eigen::VectorXd& x1) {
  const ScenarioConfig& cfg = *ctx.cfg;
  const ValueTable table = value_table(*ctx.bank, x1, 1);
  const GiNODParams params = synthesize_ginod(ctx.z, table, cfg.opinion.damping);
  const Opinions drive = value_drive(ctx.z, table, cfg.opinion.value_drive);
  Opinions dz0;
  for (const auto& zi : ctx.z) dz0.push_back(Eigen::VectorXd::Zero(zi.size()));
  const Opinions rhs = driven_rhs(params, drive, dz0, ctx.lambda);
  Opinions z1 = ctx.z;
  for (std::size_t i = 0; i < z1.size(); ++i) z1[i] += cfg.sim.dt * rhs[i];
  return z1;
}

}  // namespace

Opinions l1_opinion_step(const L1Context& ctx, const ControlInput& u0) {
  return opinion_step_at(ctx, first_step(ctx, u0));
}

double l1_objective(const L1Context& ctx, const Eigen::Vector4d& decision) {
  const ScenarioConfig& cfg = *ctx.cfg;
  const ControlInput u0 = decision.head<2>();
  const ControlInput u1 = decision.tail<2>();
  const Eigen::VectorXd x1 = first_step(ctx, u0);
  const Opinions z1 = opinion_step_at(ctx, x1);
  const auto s = probabilities(z1, *ctx.bank);

  double J = stage_cost_independent(ctx.player, ctx.x, u0, cfg.cost) +
             stage_cost_independent(ctx.player, x1, u1, cfg.cost);
  for (int idx = 0; idx < ctx.bank->size(); ++idx) {
    const auto& entry = ctx.bank->at_index(idx);
    const auto& pol = entry.result.policy;
    auto u = feedback_controls(pol, 1, x1);
    u[ctx.player] = u1;
    const Eigen::VectorXd x2 = step_joint(x1, u, cfg.sim.dt, cfg.vehicle);
    const int t2 = std::min(2, entry.result.value.horizon());
    J += tuple_weight(s, entry.tuple) * eval_value(entry.result.value, ctx.player, x2, t2);
  }
  return J;
}

PlannerOutput l1_policy(int player, const Eigen::VectorXd& x, const Opinions& z,
                        std::span<const double> lambda, const SubgameBank& bank,
                        const ScenarioConfig& cfg) {
  const L1Context ctx = make_l1_context(player, x, z, lambda, bank, cfg);
  const auto& box = cfg.vehicle.box;
  Eigen::Vector4d lo, hi;
  lo << box.lo, box.lo;
  hi << box.hi, box.hi;
  auto project = [&](const Eigen::Vector4d& d) -> Eigen::Vector4d {
    return d.cwiseMax(lo).cwiseMin(hi);
  };
  const double h = cfg.planner.l1_fd_step;
  auto objective = [&](const Eigen::Vector4d& d) { return l1_objective(ctx, d); };
  auto gradient = [&](const Eigen::Vector4d& d) {
    Eigen::Vector4d g;
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector4d a = d, b = d;
      a(k) += h;
      b(k) -= h;
      g(k) = (objective(a) - objective(b)) / (2.0 * h);
    }
    return g;
  };

  // Starts: L0 action held for both steps, zero, then seeded box samples.
  std::vector<Eigen::Vector4d> starts;
  const ControlInput l0 = l0_policy(player, x, z, bank, cfg).control;
  starts.push_back((Eigen::Vector4d() << l0, l0).finished());
  starts.push_back(project(Eigen::Vector4d::Zero()));
  std::mt19937_64 rng(cfg.sim.seed * 1000003ULL + static_cast<std::uint64_t>(player));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(starts.size()) < cfg.planner.l1_starts) {
    Eigen::Vector4d d;
    for (int k = 0; k < 4; ++k) d(k) = lo(k) + unit(rng) * (hi(k) - lo(k));
    starts.push_back(d);
  }
  starts.resize(std::max(1, std::min<int>(cfg.planner.l1_starts, starts.size())));

  PlannerOutput best;
  best.objective = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& start : starts) {
    Eigen::Vector4d d = start;
    double J = objective(d);
    if (!std::isfinite(J)) continue;
    double step = 1.0;
    int it = 0;
    bool conv = false;
    for (; it < cfg.planner.l1_max_iters; ++it) {
      const Eigen::Vector4d g = gradient(d);
      if (!g.allFinite()) break;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Eigen::Vector4d cand = project(d - step * g);
        const double Jc = objective(cand);
        if (std::isfinite(Jc) && Jc <= J - 1e-4 * g.dot(d - cand)) {
          const double change = (cand - d).lpNorm<Eigen::Infinity>();
          d = cand;
          J = Jc;
          moved = true;
          step *= 2.0;
          if (change < cfg.planner.l1_tol) conv = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        conv = true;
        break;
      }
      if (conv) break;
    }
    if (std::isfinite(J) && J < best.objective) {
      best.objective = J;
      best.control = d.head<2>();
      best.iterations = it;
      best.converged = conv;
      any = true;
    }
  }
  if (!any) throw SolverError("l1_policy: no start produced a finite objective");
  return best;
}

}  // namespace ginod
