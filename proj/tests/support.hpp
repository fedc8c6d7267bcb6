// Shared oracles and fixtures for the unit, property and acceptance tests.
// Everything here is written independently of the library internals.

#ifndef GINOD_TESTS_SUPPORT_HPP
#define GINOD_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ginod/ilq.hpp"
#include "ginod/opinion.hpp"

namespace support {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline VectorXd uniform_vec(std::mt19937_64& rng, int n, double lo, double hi) {
  VectorXd v(n);
  for (int k = 0; k < n; ++k) v(k) = uniform(rng, lo, hi);
  return v;
}

inline Eigen::Matrix2d uniform_2x2(std::mt19937_64& rng, double lo, double hi) {
  Eigen::Matrix2d M;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) M(a, b) = uniform(rng, lo, hi);
  return M;
}

inline double rel_err(const MatrixXd& a, const MatrixXd& b) {
  const double scale = std::max(b.norm(), 1e-12);
  return (a - b).norm() / scale;
}

// Central differences of a scalar function.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x, double h) {
  VectorXd g(x.size());
  for (int k = 0; k < x.size(); ++k) {
    VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    g(k) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                            const VectorXd& x, double h) {
  const VectorXd f0 = f(x);
  MatrixXd J(f0.size(), x.size());
  for (int k = 0; k < x.size(); ++k) {
    VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    J.col(k) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

// ---------------------------------------------------------------------------
// Opinion-weighted value by direct summation in long double.

inline std::vector<long double> softmax_ld(const std::vector<long double>& z) {
  long double m = z[0];
  for (long double v : z) m = std::max(m, v);
  std::vector<long double> e(z.size());
  long double s = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    e[k] = std::exp(z[k] - m);
    s += e[k];
  }
  for (auto& v : e) v /= s;
  return e;
}

// Two players, two options: sum_ab s1_a s2_b V(a, b).
inline long double weighted_value_2x2(const Eigen::Matrix2d& V,
                                      const std::vector<long double>& z1,
                                      const std::vector<long double>& z2) {
  const auto s1 = softmax_ld(z1);
  const auto s2 = softmax_ld(z2);
  long double acc = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) acc += s1[a] * s2[b] * static_cast<long double>(V(a, b));
  return acc;
}

// Full 4x4 Hessian of the weighted value over (z1, z2) by second-order central
// differences in long double.
inline MatrixXd fd_hessian_2x2(const Eigen::Matrix2d& V, const VectorXd& z1,
                               const VectorXd& z2, long double h = 1e-4L) {
  auto f = [&](const std::vector<long double>& w) {
    return weighted_value_2x2(V, {w[0], w[1]}, {w[2], w[3]});
  };
  const std::vector<long double> w0 = {z1(0), z1(1), z2(0), z2(1)};
  MatrixXd H(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      auto at = [&](int sa, int sb) {
        auto w = w0;
        w[a] += sa * h;
        w[b] += sb * h;
        return f(w);
      };
      const long double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
      H(a, b) = static_cast<double>(v);
    }
  return H;
}

// ---------------------------------------------------------------------------
// Linear dynamics, quadratic costs: x+ = A x + sum_j B_j u_j,
// c_i = 0.5 x'Q_i x + 0.5 sum_j u_j' R_ij u_j, terminal 0.5 x'Qf_i x.

class LinearQuadraticGame final : public ginod::Game {
 public:
  MatrixXd A;
  std::vector<MatrixXd> B;
  std::vector<MatrixXd> Q, Qf;
  std::vector<std::vector<MatrixXd>> R;

  int num_players() const override { return static_cast<int>(B.size()); }
  int state_dim() const override { return static_cast<int>(A.rows()); }
  int control_dim(int i) const override { return static_cast<int>(B[i].cols()); }

  VectorXd step(const VectorXd& x, const std::vector<VectorXd>& u) const override {
    VectorXd out = A * x;
    for (int j = 0; j < num_players(); ++j) out += B[j] * u[j];
    return out;
  }
  ginod::LinearizedDynamics linearize(const VectorXd&,
                                      const std::vector<VectorXd>&) const override {
    ginod::LinearizedDynamics lin;
    lin.A = A;
    lin.B = B;
    lin.affine = VectorXd::Zero(A.rows());
    return lin;
  }
  ginod::QuadratizedCost quadratize(int i, const VectorXd& x,
                                    const std::vector<VectorXd>& u) const override {
    ginod::QuadratizedCost qc;
    qc.Q = Q[i];
    qc.q = Q[i] * x;
    qc.c0 = stage_cost(i, x, u);
    for (int j = 0; j < num_players(); ++j) {
      qc.R.push_back(R[i][j]);
      qc.r.push_back(R[i][j] * u[j]);
    }
    return qc;
  }
  ginod::QuadratizedCost quadratize_terminal(int i, const VectorXd& x) const override {
    ginod::QuadratizedCost qc;
    qc.Q = Qf[i];
    qc.q = Qf[i] * x;
    qc.c0 = terminal_cost(i, x);
    for (int j = 0; j < num_players(); ++j) {
      qc.R.push_back(MatrixXd::Zero(control_dim(j), control_dim(j)));
      qc.r.push_back(VectorXd::Zero(control_dim(j)));
    }
    return qc;
  }
  double stage_cost(int i, const VectorXd& x, const std::vector<VectorXd>& u) const override {
    double c = 0.5 * x.dot(Q[i] * x);
    for (int j = 0; j < num_players(); ++j) c += 0.5 * u[j].dot(R[i][j] * u[j]);
    return c;
  }
  double terminal_cost(int i, const VectorXd& x) const override {
    return 0.5 * x.dot(Qf[i] * x);
  }
};

inline MatrixXd random_psd(std::mt19937_64& rng, int n, double shift) {
  const MatrixXd M = uniform_vec(rng, n * n, -1, 1).reshaped(n, n);
  return M * M.transpose() + shift * MatrixXd::Identity(n, n);
}

// Random game: n states, every player with m controls.
inline LinearQuadraticGame random_lq_game(std::mt19937_64& rng, int players, int n, int m) {
  LinearQuadraticGame g;
  g.A = MatrixXd::Identity(n, n) + 0.2 * uniform_vec(rng, n * n, -1, 1).reshaped(n, n);
  for (int i = 0; i < players; ++i) {
    g.B.push_back(0.5 * uniform_vec(rng, n * m, -1, 1).reshaped(n, m));
    g.Q.push_back(random_psd(rng, n, 0.1));
    g.Qf.push_back(random_psd(rng, n, 0.1));
  }
  g.R.resize(players);
  for (int i = 0; i < players; ++i)
    for (int j = 0; j < players; ++j)
      g.R[i].push_back(i == j ? random_psd(rng, m, 0.5) : random_psd(rng, m, 0.0) * 0.1);
  return g;
}

// Textbook finite-horizon LQR: P_T = Qf, K_t = (R + B'PB)^{-1} B'PA,
// P_t = Q + A'P(A - BK). Control law u = -K x, cost-to-go 0.5 x'P_t x.
struct LqrOracle {
  std::vector<MatrixXd> K;  // horizon
  std::vector<MatrixXd> P;  // horizon + 1
};

inline LqrOracle lqr_oracle(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                            const MatrixXd& R, const MatrixXd& Qf, int horizon) {
  LqrOracle o;
  o.K.resize(horizon);
  o.P.resize(horizon + 1);
  o.P[horizon] = Qf;
  for (int t = horizon - 1; t >= 0; --t) {
    const MatrixXd& P = o.P[t + 1];
    const MatrixXd S = R + B.transpose() * P * B;
    o.K[t] = S.llt().solve(B.transpose() * P * A);
    o.P[t] = Q + A.transpose() * P * (A - B * o.K[t]);
    o.P[t] = 0.5 * (o.P[t] + o.P[t].transpose()).eval();
  }
  return o;
}

// Feedback Nash equilibrium of the LQ game: at each step the stacked linear
// system (R_ii + B_i'Z_iB_i) K_i + B_i'Z_i sum_{j!=i} B_j K_j = B_i'Z_iA,
// solved with Householder QR; u_i = -K_i x.
struct NashOracle {
  std::vector<std::vector<MatrixXd>> K;  // [t][i]
  std::vector<std::vector<MatrixXd>> Z;  // [t][i], horizon + 1
};

inline NashOracle nash_oracle(const LinearQuadraticGame& g, int horizon) {
  const int N = g.num_players();
  const int n = g.state_dim();
  NashOracle o;
  o.K.assign(horizon, std::vector<MatrixXd>(N));
  o.Z.assign(horizon + 1, std::vector<MatrixXd>(N));
  for (int i = 0; i < N; ++i) o.Z[horizon][i] = g.Qf[i];
  std::vector<int> off(N + 1, 0);
  for (int i = 0; i < N; ++i) off[i + 1] = off[i] + g.control_dim(i);
  const int m = off[N];
  for (int t = horizon - 1; t >= 0; --t) {
    MatrixXd S = MatrixXd::Zero(m, m), Y(m, n);
    for (int i = 0; i < N; ++i) {
      const MatrixXd& Zi = o.Z[t + 1][i];
      for (int j = 0; j < N; ++j)
        S.block(off[i], off[j], g.control_dim(i), g.control_dim(j)) =
            g.B[i].transpose() * Zi * g.B[j] + (i == j ? g.R[i][i] : MatrixXd::Zero(g.control_dim(i), g.control_dim(j)));
      Y.middleRows(off[i], g.control_dim(i)) = g.B[i].transpose() * Zi * g.A;
    }
    const MatrixXd Kall = S.householderQr().solve(Y);
    MatrixXd F = g.A;
    for (int i = 0; i < N; ++i) {
      o.K[t][i] = Kall.middleRows(off[i], g.control_dim(i));
      F -= g.B[i] * o.K[t][i];
    }
    for (int i = 0; i < N; ++i) {
      MatrixXd Zi = g.Q[i] + F.transpose() * o.Z[t + 1][i] * F;
      for (int j = 0; j < N; ++j) Zi += o.K[t][j].transpose() * g.R[i][j] * o.K[t][j];
      o.Z[t][i] = 0.5 * (Zi + Zi.transpose());
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// Classical RK4 on the bare or driven GiNOD field with frozen parameters.

inline ginod::Opinions axpy(const ginod::Opinions& a, double s, const ginod::Opinions& b) {
  ginod::Opinions out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += s * b[i];
  return out;
}

inline double opinion_norm(const ginod::Opinions& z) {
  double s = 0;
  for (const auto& v : z) s += v.squaredNorm();
  return std::sqrt(s);
}

inline ginod::Opinions rk4_step(const ginod::GiNODParams& p, const ginod::Opinions& dz,
                                const std::vector<double>& lambda, double h,
                                const ginod::Opinions* drive = nullptr) {
  auto f = [&](const ginod::Opinions& y) {
    return drive ? ginod::driven_rhs(p, *drive, y, lambda) : ginod::ginod_rhs(p, y, lambda);
  };
  const auto k1 = f(dz);
  const auto k2 = f(axpy(dz, h / 2, k1));
  const auto k3 = f(axpy(dz, h / 2, k2));
  const auto k4 = f(axpy(dz, h, k3));
  ginod::Opinions out = dz;
  for (std::size_t i = 0; i < dz.size(); ++i)
    out[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

// Value table V[i](a, b) whose entries do not depend on the player's own
// option: V1(a, b) = c1(b), V2(a, b) = c2(a).
inline ginod::ValueTable own_option_independent_table(std::mt19937_64& rng) {
  Eigen::Matrix2d V1, V2;
  const double c10 = uniform(rng, -5, 5), c11 = uniform(rng, -5, 5);
  const double c20 = uniform(rng, -5, 5), c21 = uniform(rng, -5, 5);
  V1 << c10, c11, c10, c11;
  V2 << c20, c20, c21, c21;
  return ginod::table_2x2(V1, V2);
}

}  // namespace support

#endif  // GINOD_TESTS_SUPPORT_HPP
