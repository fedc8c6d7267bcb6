#include "ginod/opinion.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace ginod {
namespace {

void check_opinions(const Opinions& z, const ValueTable& table) {
  if (static_cast<int>(z.size()) != table.num_players())
    throw DimensionError("opinions and value table disagree on the number of players");
  for (int i = 0; i < table.num_players(); ++i) {
    if (z[i].size() != table.counts[i])
      throw DimensionError("opinion of agent " + std::to_string(i) +
                           " has the wrong number of options");
    if (!z[i].allFinite()) throw SolverError("non-finite opinion");
  }
}

void check_player(int player, const ValueTable& table) {
  if (player < 0 || player >= table.num_players())
    throw DimensionError("invalid player id " + std::to_string(player));
}

std::vector<Eigen::VectorXd> all_softmax(const Opinions& z) {
  std::vector<Eigen::VectorXd> s;
  s.reserve(z.size());
  for (const auto& zi : z) s.push_back(softmax(zi));
  return s;
}

// Product of probabilities over every player except those in `skip`.
double weight_except(const std::vector<Eigen::VectorXd>& s, const std::vector<int>& tuple,
                     int skip_a, int skip_b) {
  double w = 1.0;
  for (int k = 0; k < static_cast<int>(tuple.size()); ++k) {
    if (k == skip_a || k == skip_b) continue;
    w *= s[k](tuple[k]);
  }
  return w;
}

// m_a = sum over tuples with own option a of the other players' weights * V.
Eigen::VectorXd marginal(int player, int i, const std::vector<Eigen::VectorXd>& s,
                         const ValueTable& table) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(table.counts[i]);
  for (int idx = 0; idx < table.size(); ++idx) {
    const auto tuple = table.tuple_of(idx);
    m(tuple[i]) += weight_except(s, tuple, i, -1) * table.values[player](idx);
  }
  return m;
}

}  // namespace

int ValueTable::size() const {
  int n = 1;
  for (int c : counts) n *= c;
  return n;
}

std::vector<int> ValueTable::tuple_of(int index) const {
  std::vector<int> tuple(counts.size());
  for (int k = static_cast<int>(counts.size()) - 1; k >= 0; --k) {
    tuple[k] = index % counts[k];
    index /= counts[k];
  }
  return tuple;
}

int ValueTable::index_of(std::span<const int> tuple) const {
  int idx = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) idx = idx * counts[k] + tuple[k];
  return idx;
}

double ValueTable::at(int player, std::span<const int> tuple) const {
  return values[player](index_of(tuple));
}

void check_table(const ValueTable& table) {
  if (table.counts.empty()) throw ConfigError("value table has no players");
  if (static_cast<int>(table.values.size()) != table.num_players())
    throw ConfigError("value table needs one value vector per player");
  for (int c : table.counts)
    if (c < 1) throw ConfigError("value table option count must be positive");
  for (int i = 0; i < table.num_players(); ++i) {
    if (table.values[i].size() != table.size())
      throw ConfigError("value table for player " + std::to_string(i) + " is incomplete");
    if (!table.values[i].allFinite())
      throw ConfigError("value table for player " + std::to_string(i) +
                        " has non-finite entries");
  }
}

ValueTable table_2x2(const Eigen::Matrix2d& V1, const Eigen::Matrix2d& V2) {
  ValueTable t;
  t.counts = {2, 2};
  t.values.assign(2, Eigen::VectorXd(4));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      t.values[0](2 * a + b) = V1(a, b);
      t.values[1](2 * a + b) = V2(a, b);
    }
  return t;
}

ValueTable value_table(const SubgameBank& bank, const Eigen::VectorXd& x, int t) {
  ValueTable table;
  table.counts = bank.option_counts();
  const int n = bank.num_players();
  table.values.assign(n, Eigen::VectorXd(bank.size()));
  for (int idx = 0; idx < bank.size(); ++idx) {
    const auto& val = bank.at_index(idx).result.value;
    const int tt = std::min(t, val.horizon());
    for (int i = 0; i < n; ++i) table.values[i](idx) = eval_value(val, i, x, tt);
  }
  return table;
}

double opinion_weighted_value(int player, const Opinions& z, const ValueTable& table) {
  check_table(table);
  check_player(player, table);
  check_opinions(z, table);
  const auto s = all_softmax(z);
  double v = 0.0;
  for (int idx = 0; idx < table.size(); ++idx)
    v += weight_except(s, table.tuple_of(idx), -1, -1) * table.values[player](idx);
  return v;
}

Eigen::VectorXd grad_opinion_value(int player, int wrt, const Opinions& z,
                                   const ValueTable& table) {
  check_table(table);
  check_player(player, table);
  check_player(wrt, table);
  check_opinions(z, table);
  const auto s = all_softmax(z);
  return softmax_jacobian(s[wrt]) * marginal(player, wrt, s, table);
}

Eigen::MatrixXd hessian_block(int player, int i, int j, const Opinions& z,
                              const ValueTable& table) {
  check_table(table);
  check_player(player, table);
  check_player(i, table);
  check_player(j, table);
  check_opinions(z, table);
  const auto s = all_softmax(z);

  if (i != j) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(table.counts[i], table.counts[j]);
    for (int idx = 0; idx < table.size(); ++idx) {
      const auto tuple = table.tuple_of(idx);
      M(tuple[i], tuple[j]) += weight_except(s, tuple, i, j) * table.values[player](idx);
    }
    return softmax_jacobian(s[i]) * M * softmax_jacobian(s[j]);
  }

  const Eigen::VectorXd m = marginal(player, i, s, table);
  const Eigen::VectorXd& si = s[i];
  const int n = table.counts[i];
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double h = 0.0;
      for (int l = 0; l < n; ++l) {
        const double dla = (l == a) - si(a);
        const double dlb = (l == b) - si(b);
        h += m(l) * si(l) * (dla * dlb - si(a) * ((a == b) - si(b)));
      }
      H(a, b) = h;
    }
  }
  return 0.5 * (H + H.transpose());
}

std::vector<Eigen::MatrixXd> hessian_blocks(int player, const Opinions& z_bar,
                                            const ValueTable& table) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int j = 0; j < table.num_players(); ++j)
    blocks.push_back(hessian_block(player, player, j, z_bar, table));
  return blocks;
}

GiNODParams synthesize_ginod(const Opinions& z_bar, const ValueTable& table,
                             double damping) {
  if (!(damping >= 0.0) || !std::isfinite(damping))
    throw ConfigError("opinion damping must be a nonnegative number");
  GiNODParams p;
  const int n = table.num_players();
  p.G.resize(n);
  for (int i = 0; i < n; ++i) {
    for (auto& block : hessian_blocks(i, z_bar, table)) p.G[i].push_back(-block);
    p.D.push_back(damping * Eigen::MatrixXd::Identity(table.counts[i], table.counts[i]));
  }
  return p;
}

Eigen::MatrixXd system_matrix(const GiNODParams& params) {
  const int n = params.num_players();
  std::vector<int> off(n + 1, 0);
  for (int i = 0; i < n; ++i) off[i + 1] = off[i] + static_cast<int>(params.D[i].rows());
  Eigen::MatrixXd S(off[n], off[n]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      S.block(off[i], off[j], params.G[i][j].rows(), params.G[i][j].cols()) =
          params.G[i][j];
  return S;
}

Opinions ginod_rhs(const GiNODParams& params, const Opinions& dz,
                   std::span<const double> lambda) {
  const int n = params.num_players();
  if (static_cast<int>(dz.size()) != n || static_cast<int>(lambda.size()) != n)
    throw DimensionError("ginod_rhs: per-agent argument size mismatch");
  // Channel p collects option p of every agent that has one, so agents with
  // more options than player i still feed in.
  int channels = 0;
  for (const auto& v : dz) channels = std::max(channels, static_cast<int>(v.size()));
  Opinions out(n);
  for (int i = 0; i < n; ++i) {
    const int ni = static_cast<int>(dz[i].size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ni);
    for (int l = 0; l < ni; ++l) {
      for (int p = 0; p < channels; ++p) {
        double arg = 0.0;
        for (int j = 0; j < n; ++j) {
          if (p < dz[j].size()) arg += params.G[i][j](l, p) * dz[j](p);
        }
        g(l) += std::tanh(arg);
      }
    }
    out[i] = -params.D[i] * dz[i] + lambda[i] * g;
  }
  return out;
}

Opinions value_drive(const Opinions& z_bar, const ValueTable& table, double gain) {
  Opinions out;
  for (int i = 0; i < table.num_players(); ++i) {
    if (gain == 0.0) {
      out.push_back(Eigen::VectorXd::Zero(table.counts[i]));
      continue;
    }
    const Eigen::VectorXd g = grad_opinion_value(i, i, z_bar, table);
    out.push_back(gain * (-g).array().tanh().matrix());
  }
  return out;
}

Opinions driven_rhs(const GiNODParams& params, const Opinions& drive,
                    const Opinions& dz, std::span<const double> lambda) {
  Opinions out = ginod_rhs(params, dz, lambda);
  if (drive.size() != out.size())
    throw DimensionError("driven_rhs: drive has the wrong number of agents");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += lambda[i] * drive[i];
  return out;
}

double price_of_indecision(int player, const Opinions& z, const ValueTable& table) {
  check_table(table);
  check_player(player, table);
  check_opinions(z, table);
  const Eigen::VectorXd& V = table.values[player];
  const double floor = V.minCoeff();
  const Eigen::VectorXd sigma = softmax(z[player]);
  const int own = table.counts[player];

  // Enumerate opponents' tuples as tuples with the player's own entry at 0.
  double worst = 1.0;
  for (int idx = 0; idx < table.size(); ++idx) {
    auto tuple = table.tuple_of(idx);
    if (tuple[player] != 0) continue;
    Eigen::VectorXd v(own);
    for (int l = 0; l < own; ++l) {
      tuple[player] = l;
      v(l) = V(table.index_of(tuple)) - floor + 1.0;
    }
    const double den = v.minCoeff();
    if (!(den > 0.0)) throw ConfigError("price of indecision: nonpositive denominator");
    // Written as an excess over the minimum so that ties give exactly 1; the
    // softmax weights need not sum to exactly 1 in floating point.
    double excess = 0.0;
    for (int l = 0; l < own; ++l) excess += sigma(l) * (v(l) - den);
    worst = std::max(worst, 1.0 + excess / den);
  }
  return worst;
}

double attention_rhs(double lambda, double poi, double m, double rho) {
  return -m * lambda + rho * (poi - 1.0);
}

double attention_steady_state(double poi, double m, double rho) {
  if (!(m > 0.0)) throw ConfigError("attention damping must be positive");
  return rho * (poi - 1.0) / m;
}

OpinionUpdate integrate_opinions(const OpinionState& state, const AttentionState& att,
                                 const GiNODParams& params, std::span<const double> poi,
                                 double dt, double m, double rho, const Opinions* drive) {
  if (!(dt > 0.0)) throw ConfigError("integrate_opinions: dt must be positive");
  const int n = params.num_players();
  if (static_cast<int>(poi.size()) != n || static_cast<int>(att.lambda.size()) != n)
    throw DimensionError("integrate_opinions: per-agent argument size mismatch");

  const Opinions rhs = drive ? driven_rhs(params, *drive, state.dz, att.lambda)
                             : ginod_rhs(params, state.dz, att.lambda);
  OpinionUpdate out{state, att};
  for (int i = 0; i < n; ++i) {
    out.opinions.dz[i] = state.dz[i] + dt * rhs[i];
    out.opinions.z[i] = state.z_bar[i] + out.opinions.dz[i];
    const double lam = att.lambda[i] + dt * attention_rhs(att.lambda[i], poi[i], m, rho);
    out.attention.lambda[i] = std::max(0.0, lam);
  }
  return out;
}

}  // namespace ginod
