///////////////////////////////////////////////////////////////////////////////
//
// Opinions over intent options: softmax probabilities, the opinion-weighted
// game value and its derivatives, game-induced nonlinear opinion dynamics
// (GiNOD), the price of indecision and attention dynamics.
//
// Tuples of options are flattened row-major (the first player's option
// varies slowest), matching SubgameBank.
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_OPINION_HPP
#define GINOD_OPINION_HPP

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ginod/ilq.hpp"
#include "ginod/types.hpp"

namespace ginod {

// Numerically stable softmax (max-subtraction).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  const Scalar shift = z.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (z.array() - shift).exp().matrix();
  return e / e.sum();
}

// Jacobian of softmax: diag(s) - s s'.
inline Eigen::MatrixXd softmax_jacobian(const Eigen::VectorXd& s) {
  return Eigen::MatrixXd(s.asDiagonal()) - s * s.transpose();
}

// Subgame values V^i(tuple) for every player.
struct ValueTable {
  std::vector<int> counts;               // options per player
  std::vector<Eigen::VectorXd> values;   // [player], one entry per tuple

  int num_players() const { return static_cast<int>(counts.size()); }
  int size() const;
  std::vector<int> tuple_of(int index) const;
  int index_of(std::span<const int> tuple) const;
  double at(int player, std::span<const int> tuple) const;
};

// Throws ConfigError if sizes are inconsistent or entries are not finite.
void check_table(const ValueTable& table);

// Two players, two options; V[i](a, b) = V^i(theta^1_a, theta^2_b).
ValueTable table_2x2(const Eigen::Matrix2d& V1, const Eigen::Matrix2d& V2);

// V^i evaluated at x for every subgame, t steps into each subgame plan.
ValueTable value_table(const SubgameBank& bank, const Eigen::VectorXd& x, int t);

using Opinions = std::vector<Eigen::VectorXd>;

struct OpinionState {
  Opinions z;
  Opinions z_bar;
  Opinions dz;
};

struct AttentionState {
  std::vector<double> lambda;
};

double opinion_weighted_value(int player, const Opinions& z, const ValueTable& table);

Eigen::VectorXd grad_opinion_value(int player, int wrt, const Opinions& z,
                                   const ValueTable& table);

// d^2 Vhat^player / dz^i dz^j.
Eigen::MatrixXd hessian_block(int player, int i, int j, const Opinions& z,
                              const ValueTable& table);

// Blocks H^player_{player, j} for every j.
std::vector<Eigen::MatrixXd> hessian_blocks(int player, const Opinions& z_bar,
                                            const ValueTable& table);

struct GiNODParams {
  // G[i][j] = -H^i_{ij}. alpha/beta are the diagonal/off-diagonal entries of
  // G[i][i], gamma/eta those of G[i][j].
  std::vector<std::vector<Eigen::MatrixXd>> G;
  std::vector<Eigen::MatrixXd> D;

  int num_players() const { return static_cast<int>(G.size()); }
  double alpha(int i, int l) const { return G[i][i](l, l); }
  double beta(int i, int l, int p) const { return G[i][i](l, p); }
  double gamma(int i, int j, int l) const { return G[i][j](l, l); }
  double eta(int i, int j, int l, int p) const { return G[i][j](l, p); }
};

GiNODParams synthesize_ginod(const Opinions& z_bar, const ValueTable& table,
                             double damping);

// Stacked matrix with block (i, j) = G[i][j].
Eigen::MatrixXd system_matrix(const GiNODParams& params);

// Per-agent GiNOD vector field with tanh saturation.
Opinions ginod_rhs(const GiNODParams& params, const Opinions& dz,
                   std::span<const double> lambda);

// gain * tanh(-grad_{z^i} Vhat^i(z_bar)) per agent. Added inside the
// attention-scaled bracket it breaks the symmetry that keeps dz = 0 fixed
// for two options.
Opinions value_drive(const Opinions& z_bar, const ValueTable& table, double gain);

// ginod_rhs plus lambda^i * drive^i.
Opinions driven_rhs(const GiNODParams& params, const Opinions& drive,
                    const Opinions& dz, std::span<const double> lambda);

// Worst case over opponents' tuples of the opinion-averaged value over the
// best committed value, on values shifted so the table minimum is 1.
double price_of_indecision(int player, const Opinions& z, const ValueTable& table);

double attention_rhs(double lambda, double poi, double m, double rho);

// Steady state rho (poi - 1) / m.
double attention_steady_state(double poi, double m, double rho);

struct OpinionUpdate {
  OpinionState opinions;
  AttentionState attention;
};

// One forward-Euler step of the opinion and attention dynamics. dz advances
// by dt * rhs, lambda is clamped at 0 and z = z_bar + dz. `drive` may be
// null for the bare dynamics.
OpinionUpdate integrate_opinions(const OpinionState& state, const AttentionState& att,
                                 const GiNODParams& params, std::span<const double> poi,
                                 double dt, double m, double rho,
                                 const Opinions* drive = nullptr);

}  // namespace ginod

#endif  // GINOD_OPINION_HPP
