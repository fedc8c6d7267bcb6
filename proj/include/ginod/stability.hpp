///////////////////////////////////////////////////////////////////////////////
//
// Local stability of GiNOD for two players with two options each.
//
// The linearization of GiNOD at dz = 0 with common damping d and common
// attention lambda is -d I + lambda * Hs, where Hs = Gamma (x) [[1,-1],[-1,1]]
// and Gamma = [[a1, b1], [b2, a2]].
//
///////////////////////////////////////////////////////////////////////////////

#ifndef GINOD_STABILITY_HPP
#define GINOD_STABILITY_HPP

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ginod/opinion.hpp"

namespace ginod {

using Spectrum = std::vector<std::complex<double>>;

inline constexpr double kVerdictBand = 1e-9;
inline constexpr double kTieTolerance = 1e-9;

struct GammaDecomposition {
  double a1 = 0.0, a2 = 0.0, b1 = 0.0, b2 = 0.0;
  Eigen::Matrix2d Gamma = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d H2 = (Eigen::Matrix2d() << 1, -1, -1, 1).finished();

  Eigen::Matrix4d system_matrix() const;
  // {0, 0, a1 + a2 +- sqrt((a1 - a2)^2 + 4 b1 b2)}.
  Spectrum closed_form_spectrum() const;
};

double phi_b(const Eigen::Vector2d& z);
double phi_a(const Eigen::Vector2d& z);

// Requires a table with two players and two options each.
GammaDecomposition gamma_decomposition(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                       const ValueTable& table);

Spectrum eigenvalues(const Eigen::MatrixXd& M);
Spectrum kron_spectrum(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
// spectrum of d I + c H.
Spectrum shifted_spectrum(double d, double c, const Eigen::MatrixXd& H);

double max_real(const Spectrum& s);

// Multiset equality up to `tol` (greedy nearest matching).
bool same_spectrum(Spectrum a, Spectrum b, double tol);

struct Theorem1Check {
  bool condition_holds = false;   // d < 2 lambda Re sqrt(b1 b2)
  bool predicted_unstable = false;
  double max_real_part = 0.0;     // of -d I + lambda Hs
};

Theorem1Check check_theorem1(double d, double lambda, const GammaDecomposition& g);

struct Theorem2Check {
  // Opinion and value orderings plus a1 a2 > b1 b2. These alone do not force
  // a1, a2 < 0 when opinions are only weakly formed, so hypotheses_hold also
  // requires the signs.
  bool orderings_hold = false;
  bool hypotheses_hold = false;
  bool predicted_stable = false;
  int l1 = 0, l2 = 0;             // options favored by z_bar
  double max_real_part = 0.0;
};

Theorem2Check check_theorem2(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                             const ValueTable& table, const GammaDecomposition& g,
                             double d, double lambda);

// Values do not depend on the player's own option, for both players.
bool check_corollary1(const ValueTable& table, double tol = kTieTolerance);

enum class Verdict { kUnstable, kStable, kMarginal };
std::string to_string(Verdict v);
Verdict verdict_from(double max_real_part, double band = kVerdictBand);

struct StabilityReport {
  GammaDecomposition gamma;
  Eigen::Matrix4d linearization;   // -d I + lambda Hs
  Spectrum spectrum;
  double max_real_part = 0.0;
  Verdict verdict = Verdict::kMarginal;
  Theorem1Check theorem1;
  Theorem2Check theorem2;
  bool corollary1 = false;
  double V_a = 0.0, V_b = 0.0, V_prime = 0.0;
  double d = 0.0, lambda = 0.0;
};

StabilityReport stability_report(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2,
                                 const ValueTable& table, double d, double lambda);

}  // namespace ginod

#endif  // GINOD_STABILITY_HPP
