#include "ginod/cost.hpp"

#include <algorithm>
#include <cmath>

namespace ginod {
namespace {

double logistic(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// f(p) = logistic(k (p - lo)) * logistic(k (hi - p)) and its derivatives.
struct Ramp {
  double f, df, ddf;
};

Ramp ramp(double p, double lo, double hi, double k) {
  const double sa = logistic(k * (p - lo));
  const double sb = logistic(k * (hi - p));
  Ramp r;
  r.f = sa * sb;
  r.df = k * r.f * (sb - sa);
  r.ddf = k * (r.df * (sb - sa) -
               k * r.f * (sb * (1.0 - sb) + sa * (1.0 - sa)));
  return r;
}

// Adds w * max(0, radius - |p - c|)^2 with respect to a 2D point p, writing
// into the position slots (px, py) starting at offset `o`.
void add_point_hinge(Eigen::Vector2d p, Eigen::Vector2d c, double radius,
                     double w, int o, CostDerivatives& d) {
  const Eigen::Vector2d diff = p - c;
  const double dist = diff.norm();
  if (dist >= radius) return;
  const double h = radius - dist;
  d.value += w * h * h;
  if (dist < 1e-12) {
    d.dxx.block<2, 2>(o, o) += 2.0 * w * Eigen::Matrix2d::Identity();
    return;
  }
  const Eigen::Vector2d e = diff / dist;
  d.dx.segment<2>(o) += -2.0 * w * h * e;
  const Eigen::Matrix2d P = e * e.transpose();
  d.dxx.block<2, 2>(o, o) +=
      2.0 * w * P - 2.0 * w * h / dist * (Eigen::Matrix2d::Identity() - P);
}

void add_pair_hinge(int oi, int oj, const JointState& x, double radius,
                    double w, CostDerivatives& d) {
  const Eigen::Vector2d diff = x.segment<2>(oi) - x.segment<2>(oj);
  const double dist = diff.norm();
  if (dist >= radius) return;
  const double h = radius - dist;
  d.value += w * h * h;
  Eigen::Matrix2d hess;
  Eigen::Vector2d grad;
  if (dist < 1e-12) {
    grad.setZero();
    hess = 2.0 * w * Eigen::Matrix2d::Identity();
  } else {
    const Eigen::Vector2d e = diff / dist;
    const Eigen::Matrix2d P = e * e.transpose();
    grad = -2.0 * w * h * e;
    hess = 2.0 * w * P - 2.0 * w * h / dist * (Eigen::Matrix2d::Identity() - P);
  }
  d.dx.segment<2>(oi) += grad;
  d.dx.segment<2>(oj) -= grad;
  d.dxx.block<2, 2>(oi, oi) += hess;
  d.dxx.block<2, 2>(oj, oj) += hess;
  d.dxx.block<2, 2>(oi, oj) -= hess;
  d.dxx.block<2, 2>(oj, oi) -= hess;
}

void add_one_sided(double value, double bound, bool upper, double w, int idx,
                   CostDerivatives& d) {
  const double h = upper ? value - bound : bound - value;
  if (h <= 0.0) return;
  d.value += w * h * h;
  d.dx(idx) += (upper ? 2.0 : -2.0) * w * h;
  d.dxx(idx, idx) += 2.0 * w;
}

CostDerivatives independent_state_terms(int i, const JointState& x,
                                        const CostConfig& cfg) {
  const int n = static_cast<int>(x.size());
  CostDerivatives d;
  d.dx = VectorXd::Zero(n);
  d.dxx = MatrixXd::Zero(n, n);
  const int o = kAgentStateDim * i;

  const double dv = x(o + kV) - cfg.v_ref;
  d.value += cfg.w_speed * dv * dv;
  d.dx(o + kV) += 2.0 * cfg.w_speed * dv;
  d.dxx(o + kV, o + kV) += 2.0 * cfg.w_speed;

  if (cfg.w_heading > 0.0) {
    const double phi = x(o + kPhi);
    d.value += cfg.w_heading * phi * phi;
    d.dx(o + kPhi) += 2.0 * cfg.w_heading * phi;
    d.dxx(o + kPhi, o + kPhi) += 2.0 * cfg.w_heading;
  }

  for (int j = 0; j < num_agents(x); ++j) {
    if (j == i) continue;
    add_pair_hinge(o, kAgentStateDim * j, x, cfg.d_safe, cfg.w_collision, d);
  }

  add_one_sided(x(o + kPy), cfg.road_y_lo, false, cfg.w_road, o + kPy, d);
  add_one_sided(x(o + kPy), cfg.road_y_hi, true, cfg.w_road, o + kPy, d);

  const Eigen::Vector2d p = x.segment<2>(o);
  for (const auto& obs : cfg.obstacles) {
    add_point_hinge(p, Eigen::Vector2d(obs.x, obs.y), obs.radius,
                    cfg.w_obstacle, o, d);
  }
  return d;
}

void check_player(int i, const JointState& x) {
  if (i < 0 || i >= num_agents(x))
    throw DimensionError("invalid player id " + std::to_string(i));
}

const OptionSpec& option_at(const ThetaSet& options, int theta) {
  if (theta < 0 || theta >= static_cast<int>(options.size()))
    throw ConfigError("unknown option id " + std::to_string(theta));
  return options[theta];
}

}  // namespace

double region_membership(const TargetRegion& region, double px, double py,
                         double kappa) {
  return ramp(px, region.x_lo, region.x_hi, kappa).f *
         ramp(py, region.y_lo, region.y_hi, kappa).f;
}

double stage_cost_independent(int i, const JointState& x,
                              const ControlInput& u_i, const CostConfig& cfg) {
  check_player(i, x);
  return independent_state_terms(i, x, cfg).value +
         cfg.w_accel * u_i(kAccel) * u_i(kAccel) +
         cfg.w_steer * u_i(kSteer) * u_i(kSteer);
}

double stage_cost_dependent(int i, const JointState& x, int theta,
                            const ThetaSet& options, bool smooth,
                            double kappa) {
  check_player(i, x);
  const OptionSpec& opt = option_at(options, theta);
  const int o = kAgentStateDim * i;
  const double px = x(o + kPx);
  const double py = x(o + kPy);
  if (!smooth) return opt.region.contains(px, py) ? -opt.weight : 0.0;
  return -opt.weight * region_membership(opt.region, px, py, kappa);
}

CostDerivatives stage_cost_derivatives(int i, const JointState& x,
                                       const ControlInput& u_i, int theta,
                                       const ThetaSet& options,
                                       const CostConfig& cfg,
                                       bool include_control) {
  check_player(i, x);
  CostDerivatives d = independent_state_terms(i, x, cfg);

  const OptionSpec& opt = option_at(options, theta);
  const int o = kAgentStateDim * i;
  const Ramp rx = ramp(x(o + kPx), opt.region.x_lo, opt.region.x_hi, cfg.kappa);
  const Ramp ry = ramp(x(o + kPy), opt.region.y_lo, opt.region.y_hi, cfg.kappa);
  const double w = opt.weight;
  d.value += -w * rx.f * ry.f;
  d.dx(o + kPx) += -w * rx.df * ry.f;
  d.dx(o + kPy) += -w * rx.f * ry.df;
  d.dxx(o + kPx, o + kPx) += -w * rx.ddf * ry.f;
  d.dxx(o + kPy, o + kPy) += -w * rx.f * ry.ddf;
  d.dxx(o + kPx, o + kPy) += -w * rx.df * ry.df;
  d.dxx(o + kPy, o + kPx) += -w * rx.df * ry.df;

  if (include_control) {
    d.value += cfg.w_accel * u_i(kAccel) * u_i(kAccel) +
               cfg.w_steer * u_i(kSteer) * u_i(kSteer);
    d.du << 2.0 * cfg.w_accel * u_i(kAccel), 2.0 * cfg.w_steer * u_i(kSteer);
    d.duu.diagonal() << 2.0 * cfg.w_accel, 2.0 * cfg.w_steer;
  }
  return d;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& H, double floor) {
  const MatrixXd sym = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  const VectorXd clamped = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * clamped.asDiagonal() *
         es.eigenvectors().transpose();
}

QuadratizedCost quadratize(int i, const JointState& x,
                           std::span<const ControlInput> u,
                           std::span<const int> theta_tuple,
                           const std::vector<ThetaSet>& options,
                           const CostConfig& cfg) {
  check_player(i, x);
  const int num = num_agents(x);
  if (static_cast<int>(u.size()) != num ||
      static_cast<int>(theta_tuple.size()) != num ||
      static_cast<int>(options.size()) != num)
    throw DimensionError("quadratize: per-player argument size mismatch");

  const CostDerivatives d = stage_cost_derivatives(
      i, x, u[i], theta_tuple[i], options[i], cfg, /*include_control=*/true);
  QuadratizedCost qc;
  qc.Q = project_psd(d.dxx, 0.0);
  qc.q = d.dx;
  qc.c0 = d.value;
  qc.R.assign(num, MatrixXd::Zero(kAgentControlDim, kAgentControlDim));
  qc.r.assign(num, VectorXd::Zero(kAgentControlDim));
  qc.R[i] = project_psd(d.duu, kControlHessianFloor);
  qc.r[i] = d.du;
  return qc;
}

QuadratizedCost quadratize_terminal(int i, const JointState& x,
                                    std::span<const int> theta_tuple,
                                    const std::vector<ThetaSet>& options,
                                    const CostConfig& cfg, int num_players) {
  check_player(i, x);
  const CostDerivatives d =
      stage_cost_derivatives(i, x, ControlInput::Zero(), theta_tuple[i],
                             options[i], cfg, /*include_control=*/false);
  QuadratizedCost qc;
  qc.Q = project_psd(d.dxx, 0.0);
  qc.q = d.dx;
  qc.c0 = d.value;
  qc.R.assign(num_players, MatrixXd::Zero(kAgentControlDim, kAgentControlDim));
  qc.r.assign(num_players, VectorXd::Zero(kAgentControlDim));
  return qc;
}

}  // namespace ginod
