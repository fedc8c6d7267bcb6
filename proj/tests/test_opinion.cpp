#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ginod/opinion.hpp"
#include "support.hpp"

using namespace ginod;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

ValueTable random_table(std::mt19937_64& rng, const std::vector<int>& counts, double lo = -5,
                        double hi = 5) {
  ValueTable t;
  t.counts = counts;
  for (std::size_t i = 0; i < counts.size(); ++i)
    t.values.push_back(support::uniform_vec(rng, t.size(), lo, hi));
  return t;
}

Opinions random_opinions(std::mt19937_64& rng, const std::vector<int>& counts) {
  Opinions z;
  for (int n : counts) z.push_back(support::uniform_vec(rng, n, -2, 2));
  return z;
}

// Opinions for one agent as a single vector argument, others fixed.
std::function<double(const VectorXd&)> value_along(int player, int agent, const Opinions& z,
                                                   const ValueTable& t) {
  return [=](const VectorXd& w) {
    Opinions y = z;
    y[agent] = w;
    return opinion_weighted_value(player, y, t);
  };
}

// Values used throughout the examples: V1 rows by player-1 option.
ValueTable example_table() {
  Eigen::Matrix2d V1, V2;
  V1 << 4, 2, 1, 3;
  V2 << 1, 2, 3, 4;
  return table_2x2(V1, V2);
}

}  // namespace

TEST(Softmax, Examples) {
  EXPECT_TRUE(softmax(Vector2d(0, 0)).isApprox(Vector2d(0.5, 0.5)));
  EXPECT_TRUE(softmax(Vector2d(std::log(3.0), 0)).isApprox(Vector2d(0.75, 0.25), 1e-14));
  const VectorXd s = softmax(Vector2d(1000, 0));
  EXPECT_TRUE(s.allFinite());
  EXPECT_NEAR(s(0), 1.0, 1e-12);
  EXPECT_NEAR(s(1), 0.0, 1e-12);
}

TEST(Softmax, ProbabilityVectorAndShiftInvariance) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 4;
    const VectorXd z = support::uniform_vec(rng, n, -50, 50);
    const VectorXd s = softmax(z);
    EXPECT_NEAR(s.sum(), 1.0, 1e-12);
    EXPECT_GE(s.minCoeff(), 0.0);
    const double c = support::uniform(rng, -100, 100);
    EXPECT_LE((softmax(VectorXd(z.array() + c)) - s).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(OpinionWeightedValue, Examples) {
  const ValueTable t = example_table();
  EXPECT_DOUBLE_EQ(opinion_weighted_value(0, {Vector2d(0, 0), Vector2d(0, 0)}, t), 2.5);
  EXPECT_NEAR(opinion_weighted_value(0, {Vector2d(60, 0), Vector2d(60, 0)}, t), 4.0, 1e-12);
  EXPECT_NEAR(opinion_weighted_value(0, {Vector2d(std::log(3.0), 0), Vector2d(0, 0)}, t), 2.75,
              1e-14);
}

TEST(OpinionWeightedValue, MatchesDirectSummation) {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 100; ++s) {
    const Eigen::Matrix2d V1 = support::uniform_2x2(rng, -5, 5);
    const Eigen::Matrix2d V2 = support::uniform_2x2(rng, -5, 5);
    const ValueTable t = table_2x2(V1, V2);
    const Opinions z = random_opinions(rng, {2, 2});
    const std::vector<long double> z1 = {z[0](0), z[0](1)}, z2 = {z[1](0), z[1](1)};
    EXPECT_NEAR(opinion_weighted_value(0, z, t),
                static_cast<double>(support::weighted_value_2x2(V1, z1, z2)), 1e-13);
    EXPECT_NEAR(opinion_weighted_value(1, z, t),
                static_cast<double>(support::weighted_value_2x2(V2, z1, z2)), 1e-13);
  }
}

TEST(OpinionWeightedValue, RejectsIncompleteTable) {
  ValueTable t = example_table();
  t.values[1].resize(3);
  EXPECT_THROW(opinion_weighted_value(0, {Vector2d(0, 0), Vector2d(0, 0)}, t), ConfigError);
}

TEST(GradOpinionValue, MatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const std::vector<std::vector<int>> shapes = {{2, 2}, {3, 2}, {2, 3, 2}};
  for (int s = 0; s < 100; ++s) {
    const auto& counts = shapes[s % shapes.size()];
    const ValueTable t = random_table(rng, counts);
    const Opinions z = random_opinions(rng, counts);
    for (int i = 0; i < t.num_players(); ++i)
      for (int j = 0; j < t.num_players(); ++j) {
        const VectorXd g = grad_opinion_value(i, j, z, t);
        const VectorXd g_fd = support::fd_gradient(value_along(i, j, z, t), z[j], 1e-5);
        EXPECT_LE((g - g_fd).cwiseAbs().maxCoeff(), 1e-7) << s << " " << i << " " << j;
        EXPECT_NEAR(g.sum(), 0.0, 1e-12);
      }
  }
}

TEST(GradOpinionValue, ZeroWhenTableIgnoresAgent) {
  std::mt19937_64 rng(4);
  // V^0 depends only on agent 0's option.
  ValueTable t = random_table(rng, {2, 3});
  for (int idx = 0; idx < t.size(); ++idx) t.values[0](idx) = 1.0 + t.tuple_of(idx)[0];
  const Opinions z = random_opinions(rng, {2, 3});
  EXPECT_LE(grad_opinion_value(0, 1, z, t).norm(), 1e-15);
  EXPECT_GT(grad_opinion_value(0, 0, z, t).norm(), 1e-3);
}

TEST(HessianBlocks, MatchLongDoubleSecondDifferences) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 100; ++s) {
    const Eigen::Matrix2d V1 = support::uniform_2x2(rng, -5, 5);
    const Eigen::Matrix2d V2 = support::uniform_2x2(rng, -5, 5);
    const ValueTable t = table_2x2(V1, V2);
    const Opinions z = random_opinions(rng, {2, 2});
    for (int p = 0; p < 2; ++p) {
      MatrixXd H(4, 4);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) H.block(2 * i, 2 * j, 2, 2) = hessian_block(p, i, j, z, t);
      const MatrixXd H_fd = support::fd_hessian_2x2(p == 0 ? V1 : V2, z[0], z[1]);
      EXPECT_LE(support::rel_err(H, H_fd), 1e-6) << "sample " << s << " player " << p;
      EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(HessianBlocks, MatchGradientDifferencesForLargerGames) {
  std::mt19937_64 rng(6);
  for (int s = 0; s < 30; ++s) {
    const std::vector<int> counts = s % 2 ? std::vector<int>{3, 2} : std::vector<int>{2, 2, 3};
    const ValueTable t = random_table(rng, counts);
    const Opinions z = random_opinions(rng, counts);
    for (int p = 0; p < t.num_players(); ++p)
      for (int i = 0; i < t.num_players(); ++i)
        for (int j = 0; j < t.num_players(); ++j) {
          const MatrixXd H_fd = support::fd_jacobian(
              [&](const VectorXd& w) {
                Opinions y = z;
                y[j] = w;
                return grad_opinion_value(p, i, y, t);
              },
              z[j], 1e-5);
          EXPECT_LE((hessian_block(p, i, j, z, t) - H_fd).cwiseAbs().maxCoeff(), 1e-6);
        }
  }
}

TEST(HessianBlocks, ConstantTableIsZero) {
  ValueTable t;
  t.counts = {2, 2};
  t.values = {VectorXd::Constant(4, 7.0), VectorXd::Constant(4, -2.0)};
  const Opinions z = {Vector2d(0.3, -0.1), Vector2d(1, 2)};
  for (int p = 0; p < 2; ++p)
    for (const auto& H : hessian_blocks(p, z, t)) EXPECT_LE(H.cwiseAbs().maxCoeff(), 1e-15);
  const GiNODParams g = synthesize_ginod(z, t, 0.2);
  EXPECT_LE(system_matrix(g).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SynthesizeGinod, NeutralTwoByTwoHasKroneckerGains) {
  Eigen::Matrix2d V1, V2;
  V1 << 1, 5, 4, 2;
  V2 << 3, 1, 2, 6;
  const ValueTable t = table_2x2(V1, V2);
  const Opinions z0 = {Vector2d::Zero(), Vector2d::Zero()};
  const GiNODParams g = synthesize_ginod(z0, t, 0.1);
  const double b1 = (-1 - 2 + 5 + 4) / 16.0;
  const double b2 = (-3 - 6 + 1 + 2) / 16.0;
  EXPECT_DOUBLE_EQ(b1, 0.375);
  for (int l = 0; l < 2; ++l) {
    EXPECT_NEAR(g.alpha(0, l), 0.0, 1e-15);
    EXPECT_NEAR(g.alpha(1, l), 0.0, 1e-15);
    EXPECT_NEAR(g.gamma(0, 1, l), b1, 1e-15);
    EXPECT_NEAR(g.gamma(1, 0, l), b2, 1e-15);
    EXPECT_NEAR(g.eta(0, 1, l, 1 - l), -b1, 1e-15);
    EXPECT_NEAR(g.eta(1, 0, l, 1 - l), -b2, 1e-15);
    EXPECT_NEAR(g.beta(0, l, 1 - l), 0.0, 1e-15);
  }
  for (const auto& D : g.D) EXPECT_TRUE(D.isApprox(0.1 * MatrixXd::Identity(2, 2)));
}

TEST(SynthesizeGinod, DecidedOpinionsGiveOwnGains) {
  // Off the neutral point alpha = a and beta = -a with a from the scalar factor
  // phi_a = (s1 - s2) s1 s2 times the expected own-option value gap.
  Eigen::Matrix2d V1, V2;
  V1 << 1, 5, 4, 2;
  V2 << 3, 1, 2, 6;
  const ValueTable t = table_2x2(V1, V2);
  const Opinions z = {Vector2d(std::log(9.0), 0), Vector2d(0.4, -0.2)};
  const GiNODParams g = synthesize_ginod(z, t, 0.1);
  const VectorXd s2 = softmax(z[1]);
  const double a1 = 0.072 * (s2(0) * (V1(0, 0) - V1(1, 0)) + s2(1) * (V1(0, 1) - V1(1, 1)));
  for (int l = 0; l < 2; ++l) {
    EXPECT_NEAR(g.alpha(0, l), a1, 1e-12);
    EXPECT_NEAR(g.beta(0, l, 1 - l), -a1, 1e-12);
  }
}

TEST(GinodRhs, ZeroIsEquilibrium) {
  std::mt19937_64 rng(7);
  for (int s = 0; s < 50; ++s) {
    const std::vector<int> counts = s % 2 ? std::vector<int>{2, 2} : std::vector<int>{3, 2, 2};
    const ValueTable t = random_table(rng, counts);
    const GiNODParams p = synthesize_ginod(random_opinions(rng, counts), t, 0.2);
    Opinions zero;
    for (int n : counts) zero.push_back(VectorXd::Zero(n));
    const std::vector<double> lambda(counts.size(), support::uniform(rng, 0, 10));
    for (const auto& r : ginod_rhs(p, zero, lambda)) EXPECT_TRUE(r.isZero(0.0));
  }
}

TEST(GinodRhs, NoAttentionIsPureDecay) {
  std::mt19937_64 rng(8);
  const ValueTable t = random_table(rng, {2, 2});
  const GiNODParams p = synthesize_ginod(random_opinions(rng, {2, 2}), t, 0.3);
  const Opinions dz = random_opinions(rng, {2, 2});
  const auto r = ginod_rhs(p, dz, std::vector<double>{0.0, 0.0});
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(r[i].isApprox(-0.3 * dz[i]));
}

TEST(GinodRhs, LinearizationIsDampedSystemMatrix) {
  std::mt19937_64 rng(9);
  for (int s = 0; s < 50; ++s) {
    const std::vector<int> counts = s % 3 ? std::vector<int>{2, 2} : std::vector<int>{3, 2};
    const ValueTable t = random_table(rng, counts);
    const GiNODParams p = synthesize_ginod(random_opinions(rng, counts), t, 0.2);
    const double lambda = support::uniform(rng, 0.1, 3);
    const std::vector<double> lam(counts.size(), lambda);
    int n = 0;
    for (int c : counts) n += c;
    auto stacked = [&](const VectorXd& w) {
      Opinions dz;
      int off = 0;
      for (int c : counts) {
        dz.push_back(w.segment(off, c));
        off += c;
      }
      VectorXd out(n);
      off = 0;
      for (const auto& r : ginod_rhs(p, dz, lam)) {
        out.segment(off, r.size()) = r;
        off += r.size();
      }
      return out;
    };
    const MatrixXd J = support::fd_jacobian(stacked, VectorXd::Zero(n), 1e-6);
    const MatrixXd expected = -0.2 * MatrixXd::Identity(n, n) + lambda * system_matrix(p);
    EXPECT_LE((J - expected).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, expected.norm()));
  }
}

TEST(GinodRhs, SmallPerturbationRatioTendsToOne) {
  Eigen::Matrix2d V1, V2;
  V1 << 1, 5, 4, 2;
  V2 = V1;
  const ValueTable t = table_2x2(V1, V2);
  const GiNODParams p = synthesize_ginod({Vector2d::Zero(), Vector2d::Zero()}, t, 0.1);
  const MatrixXd L = -0.1 * MatrixXd::Identity(4, 4) + system_matrix(p);
  const Eigen::Vector4d dir(1, -0.5, 0.25, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const Eigen::Vector4d w = eps * dir;
    const auto r = ginod_rhs(p, {w.head<2>(), w.tail<2>()}, std::vector<double>{1.0, 1.0});
    Eigen::Vector4d rv;
    rv << r[0], r[1];
    const double gap = (rv - L * w).norm() / (L * w).norm();
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(ValueDrive, PointsTowardCheaperOption) {
  Eigen::Matrix2d V1, V2;
  V1 << 1, 1, 5, 5;  // option 0 is cheaper for player 1
  V2 << 3, 3, 3, 3;
  const ValueTable t = table_2x2(V1, V2);
  const Opinions z = {Vector2d::Zero(), Vector2d::Zero()};
  const Opinions d = value_drive(z, t, 2.0);
  EXPECT_GT(d[0](0), 0.0);
  EXPECT_LT(d[0](1), 0.0);
  EXPECT_NEAR(d[0](0), 2.0 * std::tanh(1.0), 1e-14);
  EXPECT_TRUE(d[1].isZero(1e-15));
  for (const auto& v : value_drive(z, t, 0.0)) EXPECT_TRUE(v.isZero(0.0));
}

TEST(PriceOfIndecision, Examples) {
  // Own option varies along rows: column b of V1 is (V1(0,b), V1(1,b)).
  Eigen::Matrix2d V1, V2;
  V1 << 4, 2, 1, 3;
  V2.setConstant(1.0);
  const ValueTable t = table_2x2(V1, V2);
  const Opinions neutral = {Vector2d::Zero(), Vector2d::Zero()};
  EXPECT_DOUBLE_EQ(price_of_indecision(0, neutral, t), 2.5);
  EXPECT_EQ(price_of_indecision(1, neutral, t), 1.0);
}

TEST(PriceOfIndecision, ArgminPointMassIsOne) {
  Eigen::Matrix2d V1, V2;
  V1 << 1, 2, 4, 3;  // option 0 is the argmin in both columns
  V2 << 1, 2, 3, 4;
  const ValueTable t = table_2x2(V1, V2);
  EXPECT_EQ(price_of_indecision(0, {Vector2d(0, -1000), Vector2d::Zero()}, t), 1.0);
}

TEST(PriceOfIndecision, AtLeastOneForAnySignedTable) {
  std::mt19937_64 rng(10);
  for (int s = 0; s < 200; ++s) {
    const std::vector<int> counts = s % 2 ? std::vector<int>{2, 2} : std::vector<int>{3, 2, 2};
    const ValueTable t = random_table(rng, counts, -100, 20);
    const Opinions z = random_opinions(rng, counts);
    for (int i = 0; i < t.num_players(); ++i) EXPECT_GE(price_of_indecision(i, z, t), 1.0);
  }
}

TEST(PriceOfIndecision, DirectEnumeration) {
  std::mt19937_64 rng(11);
  for (int s = 0; s < 100; ++s) {
    const Eigen::Matrix2d V1 = support::uniform_2x2(rng, -5, 5);
    const ValueTable t = table_2x2(V1, V1);
    const Opinions z = random_opinions(rng, {2, 2});
    const auto s1 = support::softmax_ld({z[0](0), z[0](1)});
    const long double floor = V1.minCoeff();
    long double worst = 1;
    for (int b = 0; b < 2; ++b) {
      const long double v0 = V1(0, b) - floor + 1, v1 = V1(1, b) - floor + 1;
      worst = std::max(worst, (s1[0] * v0 + s1[1] * v1) / std::min(v0, v1));
    }
    EXPECT_NEAR(price_of_indecision(0, z, t), static_cast<double>(worst), 1e-13);
  }
}

TEST(Attention, RhsAndSteadyState) {
  EXPECT_EQ(attention_rhs(0.7, 1.0, 2.0, 5.0), -1.4);
  EXPECT_EQ(attention_steady_state(2.0, 1.0, 2.0), 2.0);
  EXPECT_EQ(attention_rhs(0.0, 3.0, 1.0, 1.0), 2.0);
  EXPECT_EQ(attention_rhs(attention_steady_state(1.7, 2.0, 5.0), 1.7, 2.0, 5.0), 0.0);
  EXPECT_THROW(attention_steady_state(2.0, 0.0, 1.0), ConfigError);
}

TEST(IntegrateOpinions, PureDampingShrinks) {
  GiNODParams p;
  p.G = {{MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)}, {MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)}};
  p.D = {0.1 * MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2)};
  OpinionState st;
  st.z_bar = {Vector2d(0.5, 0), Vector2d(0, 0)};
  st.dz = {Vector2d(1, 1), Vector2d(1, 1)};
  st.z = st.dz;
  const AttentionState att{{1.0, 1.0}};
  const std::vector<double> poi = {1.0, 1.0};
  const auto up = integrate_opinions(st, att, p, poi, 0.2, 2.0, 5.0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_TRUE(up.opinions.dz[i].isApprox(Vector2d::Constant(1 - 0.1 * 0.2)));
    EXPECT_TRUE(up.opinions.z[i].isApprox(st.z_bar[i] + up.opinions.dz[i]));
  }
  EXPECT_DOUBLE_EQ(up.attention.lambda[0], 1.0 - 0.2 * 2.0);
}

TEST(IntegrateOpinions, ZeroPerturbationStaysPut) {
  std::mt19937_64 rng(12);
  const ValueTable t = random_table(rng, {2, 2});
  const GiNODParams p = synthesize_ginod(random_opinions(rng, {2, 2}), t, 0.2);
  OpinionState st;
  st.z_bar = random_opinions(rng, {2, 2});
  st.dz = {Vector2d::Zero(), Vector2d::Zero()};
  st.z = st.z_bar;
  AttentionState att{{0.5, 3.0}};
  const std::vector<double> poi = {2.0, 1.0};
  for (int k = 0; k < 200; ++k) {
    const auto up = integrate_opinions(st, att, p, poi, 0.2, 2.0, 5.0);
    for (const auto& v : up.opinions.dz) EXPECT_TRUE(v.isZero(0.0));
    att = up.attention;
  }
  EXPECT_NEAR(att.lambda[0], attention_steady_state(2.0, 2.0, 5.0), 1e-12);
  EXPECT_NEAR(att.lambda[1], 0.0, 1e-12);
  EXPECT_GE(att.lambda[1], 0.0);
}

TEST(IntegrateOpinions, HandComputedStep) {
  GiNODParams p;
  MatrixXd G00(2, 2), G01(2, 2);
  G00 << 0.2, -0.2, -0.2, 0.2;
  G01 << 0.5, -0.5, -0.5, 0.5;
  p.G = {{G00, G01}, {G01, G00}};
  p.D = {0.1 * MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2)};
  OpinionState st;
  st.z_bar = {Vector2d(1, 0), Vector2d(0, 0)};
  st.dz = {Vector2d(0.3, -0.1), Vector2d(0.2, 0.4)};
  st.z = {st.z_bar[0] + st.dz[0], st.z_bar[1] + st.dz[1]};
  const AttentionState att{{2.0, 0.5}};
  const std::vector<double> poi = {1.5, 1.0};
  const double dt = 0.2;
  const auto up = integrate_opinions(st, att, p, poi, dt, 2.0, 5.0);

  // Player 0, option 0: own channel tanh(0.2*0.3 + 0.5*0.2), other channel
  // tanh(-0.2*(-0.1) - 0.5*0.4).
  const double r00 = -0.1 * 0.3 + 2.0 * (std::tanh(0.06 + 0.1) + std::tanh(0.02 - 0.2));
  const double r01 = 0.01 + 2.0 * (std::tanh(-0.06 - 0.1) + std::tanh(-0.02 + 0.2));
  EXPECT_NEAR(up.opinions.dz[0](0), 0.3 + dt * r00, 1e-15);
  EXPECT_NEAR(up.opinions.dz[0](1), -0.1 + dt * r01, 1e-15);
  EXPECT_NEAR(up.opinions.z[0](0), 1.0 + 0.3 + dt * r00, 1e-15);
  EXPECT_DOUBLE_EQ(up.attention.lambda[0], 2.0 + dt * (-4.0 + 2.5));
  EXPECT_DOUBLE_EQ(up.attention.lambda[1], 0.5 + dt * (-1.0));
}

TEST(IntegrateOpinions, AttentionClampedAtZero) {
  GiNODParams p;
  p.G = {{MatrixXd::Zero(2, 2)}};
  p.D = {MatrixXd::Identity(2, 2)};
  OpinionState st;
  st.z_bar = st.dz = st.z = {Vector2d::Zero()};
  const auto up = integrate_opinions(st, AttentionState{{0.1}}, p, std::vector<double>{1.0}, 1.0,
                                     2.0, 5.0);
  EXPECT_EQ(up.attention.lambda[0], 0.0);
  EXPECT_THROW(integrate_opinions(st, AttentionState{{0.1}}, p, std::vector<double>{1.0}, 0.0,
                                  2.0, 5.0),
               ConfigError);
}
