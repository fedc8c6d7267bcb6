#include "ginod/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/KroneckerProduct>

namespace ginod {
namespace {

void require_2x2(const ValueTable& table) {
  check_table(table);
  if (table.counts != std::vector<int>{2, 2})
    throw ConfigError("stability analysis needs two players with two options each");
}

double V(const ValueTable& t, int player, int a, int b) {
  return t.values[player](2 * a + b);
}

}  // namespace

Eigen::Matrix4d GammaDecomposition::system_matrix() const {
  return Eigen::kroneckerProduct(Gamma, H2);
}

Spectrum GammaDecomposition::closed_form_spectrum() const {
  const std::complex<double> root =
      std::sqrt(std::complex<double>((a1 - a2) * (a1 - a2) + 4.0 * b1 * b2, 0.0));
  return {0.0, 0.0, a1 + a2 + root, a1 + a2 - root};
}

double phi_b(const Eigen::Vector2d& z) {
  const Eigen::VectorXd s = softmax(z);
  return s(0) * s(1);
}

double phi_a(const Eigen::Vector2d& z) {
  const Eigen::VectorXd s = softmax(z);
  return (s(0) - s(1)) * s(0) * s(1);
}

GammaDecomposition gamma_decomposition(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                       const ValueTable& table) {
  require_2x2(table);
  if (z1.size() != 2 || z2.size() != 2)
    throw DimensionError("gamma_decomposition: opinions must have two entries");
  const Eigen::VectorXd s1 = softmax(z1);
  const Eigen::VectorXd s2 = softmax(z2);
  const double pb = phi_b(z1) * phi_b(z2);

  GammaDecomposition g;
  g.a1 = phi_a(z1) * (s2(0) * (V(table, 0, 0, 0) - V(table, 0, 1, 0)) +
                      s2(1) * (V(table, 0, 0, 1) - V(table, 0, 1, 1)));
  g.a2 = phi_a(z2) * (s1(0) * (V(table, 1, 0, 0) - V(table, 1, 0, 1)) +
                      s1(1) * (V(table, 1, 1, 0) - V(table, 1, 1, 1)));
  for (int i = 0; i < 2; ++i) {
    const double b = pb * (-V(table, i, 0, 0) - V(table, i, 1, 1) + V(table, i, 0, 1) +
                           V(table, i, 1, 0));
    (i == 0 ? g.b1 : g.b2) = b;
  }
  g.Gamma << g.a1, g.b1, g.b2, g.a2;
  return g;
}

Spectrum eigenvalues(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw DimensionError("eigenvalues: matrix must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue solver failed");
  const Eigen::VectorXcd ev = es.eigenvalues();
  return Spectrum(ev.data(), ev.data() + ev.size());
}

Spectrum kron_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Spectrum ea = eigenvalues(A);
  const Spectrum eb = eigenvalues(B);
  Spectrum out;
  out.reserve(ea.size() * eb.size());
  for (const auto& x : ea)
    for (const auto& y : eb) out.push_back(x * y);
  return out;
}

Spectrum shifted_spectrum(double d, double c, const Eigen::MatrixXd& H) {
  Spectrum s = eigenvalues(H);
  for (auto& mu : s) mu = d + c * mu;
  return s;
}

double max_real(const Spectrum& s) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& e : s) m = std::max(m, e.real());
  return m;
}

bool same_spectrum(Spectrum a, Spectrum b, double tol) {
  if (a.size() != b.size()) return false;
  for (const auto& x : a) {
    auto best = b.end();
    double dist = std::numeric_limits<double>::infinity();
    for (auto it = b.begin(); it != b.end(); ++it) {
      const double dd = std::abs(*it - x);
      if (dd < dist) {
        dist = dd;
        best = it;
      }
    }
    if (dist > tol) return false;
    b.erase(best);
  }
  return true;
}

Theorem1Check check_theorem1(double d, double lambda, const GammaDecomposition& g) {
  Theorem1Check c;
  const double re = std::sqrt(std::complex<double>(g.b1 * g.b2, 0.0)).real();
  c.condition_holds = d < 2.0 * lambda * re;
  c.predicted_unstable = c.condition_holds;
  const Eigen::Matrix4d L =
      -d * Eigen::Matrix4d::Identity() + lambda * g.system_matrix();
  c.max_real_part = max_real(eigenvalues(L));
  return c;
}

Theorem2Check check_theorem2(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                             const ValueTable& table, const GammaDecomposition& g,
                             double d, double lambda) {
  require_2x2(table);
  Theorem2Check c;
  const Eigen::VectorXd s1 = softmax(z1);
  const Eigen::VectorXd s2 = softmax(z2);
  c.l1 = s1(0) >= s1(1) ? 0 : 1;
  c.l2 = s2(0) >= s2(1) ? 0 : 1;
  const int n1 = 1 - c.l1;
  const int n2 = 1 - c.l2;
  // Ties fail every strict inequality.
  c.orderings_hold = s1(c.l1) - s1(n1) > kTieTolerance &&
                     s2(c.l2) - s2(n2) > kTieTolerance &&
                     V(table, 0, n1, c.l2) - V(table, 0, c.l1, c.l2) > kTieTolerance &&
                     V(table, 1, c.l1, n2) - V(table, 1, c.l1, c.l2) > kTieTolerance &&
                     g.a1 * g.a2 - g.b1 * g.b2 > 0.0;
  c.hypotheses_hold = c.orderings_hold && g.a1 < 0.0 && g.a2 < 0.0;
  c.predicted_stable = c.hypotheses_hold && d > 0.0;
  const Eigen::Matrix4d L =
      -d * Eigen::Matrix4d::Identity() + lambda * g.system_matrix();
  c.max_real_part = max_real(eigenvalues(L));
  return c;
}

bool check_corollary1(const ValueTable& table, double tol) {
  require_2x2(table);
  auto eq = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  return eq(V(table, 0, 0, 0), V(table, 0, 1, 0)) && eq(V(table, 0, 0, 1), V(table, 0, 1, 1)) &&
         eq(V(table, 1, 0, 0), V(table, 1, 0, 1)) && eq(V(table, 1, 1, 0), V(table, 1, 1, 1));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kUnstable: return "unstable";
    case Verdict::kStable: return "stable";
    case Verdict::kMarginal: return "marginal";
  }
  return "marginal";
}

Verdict verdict_from(double max_real_part, double band) {
  if (max_real_part > band) return Verdict::kUnstable;
  if (max_real_part < -band) return Verdict::kStable;
  return Verdict::kMarginal;
}

StabilityReport stability_report(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                 const ValueTable& table, double d, double lambda) {
  StabilityReport r;
  r.d = d;
  r.lambda = lambda;
  r.gamma = gamma_decomposition(z1, z2, table);
  r.linearization = -d * Eigen::Matrix4d::Identity() + lambda * r.gamma.system_matrix();
  r.spectrum = eigenvalues(r.linearization);
  r.max_real_part = max_real(r.spectrum);
  r.verdict = verdict_from(r.max_real_part);
  r.theorem1 = check_theorem1(d, lambda, r.gamma);
  r.theorem2 = check_theorem2(z1, z2, table, r.gamma, d, lambda);
  r.corollary1 = check_corollary1(table);

  r.V_a = (V(table, 0, 0, 0) - V(table, 0, 1, 0)) * (V(table, 1, 0, 0) - V(table, 1, 0, 1));
  r.V_b = 1.0;
  for (int i = 0; i < 2; ++i)
    r.V_b *= -V(table, i, 0, 0) - V(table, i, 1, 1) + V(table, i, 0, 1) + V(table, i, 1, 0);
  r.V_prime = r.V_b != 0.0 ? r.V_a / r.V_b : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace ginod
