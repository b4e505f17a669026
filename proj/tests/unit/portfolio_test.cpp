#include <clustfolio/errors.hpp>
#include <clustfolio/portfolio.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/synthetic.hpp"

using namespace clustfolio;

namespace {

ReturnsPanel panel_of(const Eigen::MatrixXd& r, std::vector<std::string> tickers = {}) {
  if (tickers.empty()) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) tickers.push_back("T" + std::to_string(j));
  }
  return ReturnsPanel(synthetic_business_days(static_cast<std::size_t>(r.rows())), std::move(tickers), r);
}

MomentEstimates moments_of(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  MomentEstimates m;
  m.mu = mu;
  m.sigma = sigma;
  m.window_len = 100;
  for (Eigen::Index i = 0; i < mu.size(); ++i) m.basis.push_back("G" + std::to_string(i));
  return m;
}

double ratio(const Eigen::VectorXd& w, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  return w.dot(mu) / std::sqrt(w.dot(sigma * w));
}

// Coarse-to-fine grid search over (w1, w2, w3) with w4 = 1 - w1 - w2 - w3.
Eigen::VectorXd grid_maximizer(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  Eigen::Vector3d centre(0.25, 0.25, 0.25);
  double half = 2.5;
  double step = 0.05;
  Eigen::VectorXd best(4);
  for (int level = 0; level < 5; ++level) {
    double best_val = -std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_c = centre;
    const int steps = static_cast<int>(std::lround(2.0 * half / step));
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; b <= steps; ++b) {
        for (int c = 0; c <= steps; ++c) {
          Eigen::VectorXd w(4);
          w << centre[0] - half + a * step, centre[1] - half + b * step, centre[2] - half + c * step, 0.0;
          w[3] = 1.0 - w[0] - w[1] - w[2];
          const double v = ratio(w, mu, sigma);
          if (v > best_val) {
            best_val = v;
            best_c = w.head<3>();
            best = w;
          }
        }
      }
    }
    centre = best_c;
    half = 2.0 * step;
    step /= 10.0;
  }
  return best;
}

Eigen::MatrixXd random_spd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  }
  return a * a.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

double plain_sharpe(const std::vector<double>& r) {
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return mean / std::sqrt(ss / static_cast<double>(r.size() - 1)) * std::sqrt(252.0);
}

}  // namespace

TEST(GroupReturns, MeanOfTwoAssets) {
  Eigen::MatrixXd r(1, 2);
  r << 0.02, 0.04;
  const ReturnsPanel g = group_returns(panel_of(r), Grouping::single_group(2));
  ASSERT_EQ(g.cols(), 1u);
  EXPECT_NEAR(g.returns()(0, 0), 0.03, 1e-17);
  EXPECT_EQ(g.tickers(), std::vector<std::string>{"G0"});
}

TEST(GroupReturns, SingletonsAreIdentity) {
  const ReturnsPanel p = fixtures::iid_panel(6, 30, 1);
  const ReturnsPanel g = group_returns(p, Grouping::singletons(6));
  EXPECT_EQ(g.returns(), p.returns());
  EXPECT_EQ(g.dates(), p.dates());
}

TEST(GroupReturns, HandAveragedPairs) {
  Eigen::MatrixXd r(3, 4);
  r << 0.01, 0.03, -0.02, 0.00,  //
      0.02, -0.04, 0.05, 0.01,   //
      -0.01, 0.01, 0.02, 0.04;
  const ReturnsPanel g = group_returns(panel_of(r, {"A", "B", "C", "D"}), Grouping::from_labels({0, 0, 1, 1}));
  Eigen::MatrixXd expected(3, 2);
  expected << 0.02, -0.01, -0.01, 0.03, 0.0, 0.03;
  EXPECT_LT((g.returns() - expected).cwiseAbs().maxCoeff(), 1e-17);
}

TEST(GroupReturns, InterleavedMembers) {
  Eigen::MatrixXd r(2, 3);
  r << 0.1, 0.5, 0.3, 0.2, 0.6, 0.4;
  const Eigen::MatrixXd g = group_returns(r, Grouping::from_labels({0, 1, 0}));
  EXPECT_NEAR(g(0, 0), 0.2, 1e-16);
  EXPECT_NEAR(g(1, 0), 0.3, 1e-16);
  EXPECT_EQ(g(0, 1), 0.5);
}

TEST(GroupReturns, Mismatch) {
  EXPECT_THROW(group_returns(fixtures::iid_panel(3, 5, 1), Grouping::singletons(4)), GroupingMismatch);
}

TEST(EstimateMoments, HandComputedTwoAssets) {
  Eigen::MatrixXd r(4, 2);
  r << 0.01, 0.02, 0.03, 0.00, -0.01, 0.04, 0.05, 0.02;
  const MomentEstimates m = estimate_moments(panel_of(r), 4);
  // means 0.02 and 0.02; deviations (-0.01, 0.01, -0.03, 0.03) and (0, -0.02, 0.02, 0)
  EXPECT_NEAR(m.mu[0], 0.02, 1e-16);
  EXPECT_NEAR(m.mu[1], 0.02, 1e-16);
  EXPECT_NEAR(m.sigma(0, 0), 0.0020 / 3.0, 1e-17);
  EXPECT_NEAR(m.sigma(1, 1), 0.0008 / 3.0, 1e-17);
  EXPECT_NEAR(m.sigma(0, 1), -0.0008 / 3.0, 1e-17);
  EXPECT_EQ(m.sigma(0, 1), m.sigma(1, 0));
  EXPECT_EQ(m.window_len, 4u);
}

TEST(EstimateMoments, TrailingWindowOnly) {
  Eigen::MatrixXd r(5, 1);
  r << 100.0, 0.01, 0.02, 0.03, 0.04;
  const MomentEstimates m = estimate_moments(panel_of(r), 3);
  EXPECT_NEAR(m.mu[0], 0.03, 1e-16);
  EXPECT_NEAR(m.sigma(0, 0), 0.0001, 1e-17);
}

TEST(EstimateMoments, ConstantColumnsHaveZeroCovariance) {
  const Eigen::MatrixXd r = Eigen::MatrixXd::Constant(10, 3, 0.007);
  EXPECT_TRUE(estimate_moments(panel_of(r), 10).sigma.isZero(0.0));
}

TEST(EstimateMoments, Errors) {
  const ReturnsPanel p = fixtures::iid_panel(2, 5, 1);
  EXPECT_THROW(estimate_moments(p, 6), InsufficientData);
  EXPECT_NO_THROW(estimate_moments(p, 5));
}

TEST(EstimateMoments, SymmetricCovariance) {
  const MomentEstimates m = estimate_moments(fixtures::iid_panel(7, 60, 3), 50);
  EXPECT_LT((m.sigma - m.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tangency, EqualMeansIdentityCovariance) {
  const auto res = tangency_weights(moments_of(Eigen::VectorXd::Constant(5, 0.003), Eigen::MatrixXd::Identity(5, 5)));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(res.weights.weights[i], 0.2, 1e-15);
  EXPECT_FALSE(res.ridge_applied);
}

TEST(Tangency, ProportionalToMeansUnderIdentity) {
  const auto res = tangency_weights(moments_of(Eigen::Vector3d(0.2, 0.1, 0.1), Eigen::Matrix3d::Identity()));
  EXPECT_NEAR(res.weights.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(res.weights.weights[1], 0.25, 1e-15);
  EXPECT_NEAR(res.weights.weights[2], 0.25, 1e-15);
  EXPECT_EQ(res.weights.basis, (std::vector<std::string>{"G0", "G1", "G2"}));
}

TEST(Tangency, MatchesGridMaximizer) {
  const Eigen::MatrixXd sigma = random_spd(4, 8);
  Eigen::Vector4d mu(0.6, 0.4, 0.9, 0.5);
  const Eigen::VectorXd w = tangency_weights(moments_of(mu, sigma)).weights.weights;
  const Eigen::VectorXd oracle = grid_maximizer(mu, sigma);
  EXPECT_LT((w - oracle).cwiseAbs().maxCoeff(), 1e-4) << w.transpose() << "\n" << oracle.transpose();
  EXPECT_NEAR(w.sum(), 1.0, 1e-10);
}

TEST(Tangency, ScaleInvariantInMean) {
  const Eigen::MatrixXd sigma = random_spd(6, 2);
  Eigen::VectorXd mu(6);
  mu << 0.1, 0.3, -0.05, 0.2, 0.07, 0.15;
  const Eigen::VectorXd w = tangency_weights(moments_of(mu, sigma)).weights.weights;
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    const Eigen::VectorXd wc = tangency_weights(moments_of(c * mu, sigma)).weights.weights;
    EXPECT_LT((w - wc).cwiseAbs().maxCoeff(), 1e-10) << "c=" << c;
  }
}

TEST(Tangency, BeatsRandomCandidates) {
  const ReturnsPanel p = fixtures::iid_panel(5, 200, 17, 6e-4, 0.012);
  const MomentEstimates m = estimate_moments(p, 200);
  const Eigen::VectorXd w = tangency_weights(m).weights.weights;
  const double best = ratio(w, m.mu, m.sigma);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd c(5);
    for (int i = 0; i < 5; ++i) c[i] = z(rng);
    c[4] = 1.0 - c.head<4>().sum();
    EXPECT_GE(best, ratio(c, m.mu, m.sigma) - 1e-12);
  }
}

TEST(Tangency, SingleAssetGetsFullWeight) {
  const auto res = tangency_weights(moments_of(Eigen::VectorXd::Constant(1, -0.01), Eigen::MatrixXd::Constant(1, 1, 4e-4)));
  EXPECT_EQ(res.weights.weights[0], 1.0);
}

TEST(Tangency, ShortPositionsAllowed) {
  Eigen::Matrix2d sigma;
  sigma << 1.0, 0.9, 0.9, 1.0;
  const auto w = tangency_weights(moments_of(Eigen::Vector2d(0.3, 0.1), sigma)).weights.weights;
  // S^-1 mu is proportional to (0.3 - 0.09, 0.1 - 0.27)
  EXPECT_NEAR(w[0], 0.21 / 0.04, 1e-12);
  EXPECT_NEAR(w[1], -0.17 / 0.04, 1e-12);
}

TEST(Tangency, DegenerateAndSingular) {
  EXPECT_THROW(tangency_weights(moments_of(Eigen::Vector2d(0.1, -0.1), Eigen::Matrix2d::Identity())),
               DegenerateTangency);
  Eigen::Matrix2d bad;
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  EXPECT_THROW(tangency_weights(moments_of(Eigen::Vector2d(0.1, 0.2), bad)), SingularCovariance);
}

TEST(Tangency, RidgeFallbackOnRankDeficientCovariance) {
  Eigen::MatrixXd r(40, 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.001, 0.01);
  for (int t = 0; t < 40; ++t) {
    r(t, 0) = z(rng);
    r(t, 1) = z(rng);
    r(t, 2) = r(t, 0);
  }
  const auto res = tangency_weights(estimate_moments(panel_of(r), 40));
  EXPECT_TRUE(res.ridge_applied);
  EXPECT_TRUE(res.weights.weights.allFinite());
  EXPECT_NEAR(res.weights.weights.sum(), 1.0, 1e-10);
}

TEST(Tangency, SingletonGroupingReproducesPlainTangency) {
  const ReturnsPanel p = fixtures::iid_panel(8, 120, 5);
  const auto plain = tangency_weights(estimate_moments(p, 100));
  const auto grouped = tangency_weights(estimate_moments(group_returns(p, Grouping::singletons(8)), 100));
  EXPECT_EQ(plain.weights.weights, grouped.weights.weights);
}

TEST(PortfolioReturnSeries, Cases) {
  Eigen::MatrixXd r(2, 2);
  r << 0.01, 0.03, -0.02, 0.05;
  const ReturnsPanel p = panel_of(r, {"G0", "G1"});
  WeightVector e1{Eigen::Vector2d(1.0, 0.0), {"G0", "G1"}};
  EXPECT_EQ(portfolio_return_series(p, e1), (std::vector<double>{0.01, -0.02}));

  WeightVector mix{Eigen::Vector2d(0.25, 0.75), {"G0", "G1"}};
  const auto s = portfolio_return_series(p, mix);
  EXPECT_NEAR(s[0], 0.0025 + 0.0225, 1e-17);
  EXPECT_NEAR(s[1], -0.005 + 0.0375, 1e-17);

  Eigen::MatrixXd same(2, 2);
  same << 0.04, 0.04, -0.01, -0.01;
  WeightVector half{Eigen::Vector2d(0.5, 0.5), {"G0", "G1"}};
  EXPECT_EQ(portfolio_return_series(panel_of(same, {"G0", "G1"}), half), (std::vector<double>{0.04, -0.01}));

  WeightVector wrong{Eigen::Vector2d(0.5, 0.5), {"G1", "G0"}};
  EXPECT_THROW(portfolio_return_series(p, wrong), BasisMismatch);
}

TEST(Sharpe, AnnualizedFromDailyMoments) {
  // +-0.01 around 0.001 in alternating pairs; sample std with divisor n-1
  std::vector<double> r;
  for (int i = 0; i < 100; ++i) r.push_back(0.001 + (i % 2 == 0 ? 0.01 : -0.01));
  const double sd = 0.01 * std::sqrt(100.0 / 99.0);
  const SharpeEstimate s = sharpe(r);
  EXPECT_NEAR(s.daily_mean, 0.001, 1e-16);
  EXPECT_NEAR(s.daily_std, sd, 1e-16);
  EXPECT_NEAR(s.annualized_sharpe, 0.001 / sd * std::sqrt(252.0), 1e-12);
  EXPECT_EQ(s.n_obs, 100u);
  EXPECT_FALSE(s.bootstrap_se.has_value());
}

TEST(Sharpe, ExactDailyRatio) {
  // two points at 0.001 +- h have sample std h*sqrt(2) = 0.01
  const double h = 0.01 / std::sqrt(2.0);
  const std::vector<double> r = {0.001 + h, 0.001 - h};
  EXPECT_NEAR(sharpe(r).annualized_sharpe, 1.5875, 1e-4);
  EXPECT_NEAR(sharpe(r).annualized_sharpe, 0.1 * std::sqrt(252.0), 1e-12);
}

TEST(Sharpe, Antisymmetric) {
  std::vector<double> r = {0.01, -0.004, 0.02, 0.003, -0.011};
  std::vector<double> neg;
  for (double v : r) neg.push_back(-v);
  EXPECT_NEAR(sharpe(neg).annualized_sharpe, -sharpe(r).annualized_sharpe, 1e-15);
}

TEST(Sharpe, ZeroVariance) {
  const std::vector<double> r(10, 0.002);
  EXPECT_THROW(sharpe(r), ZeroVariance);
  EXPECT_THROW(sharpe(std::vector<double>{0.1}), InsufficientData);
}

TEST(Sharpe, PermutationInvariant) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0005, 0.01);
  std::vector<double> r(300);
  for (auto& v : r) v = z(rng);
  const double base = sharpe(r).annualized_sharpe;
  EXPECT_NEAR(base, plain_sharpe(r), 1e-12);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(r.begin(), r.end(), rng);
    EXPECT_NEAR(sharpe(r).annualized_sharpe, base, 1e-12);
  }
}

TEST(Bootstrap, TwoRepsOnThreePoints) {
  const std::vector<double> r = {0.01, -0.02, 0.005};
  // every resample with nonzero variance
  std::vector<double> possible;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        if (a == b && b == c) continue;
        possible.push_back(plain_sharpe({r[static_cast<std::size_t>(a)], r[static_cast<std::size_t>(b)],
                                         r[static_cast<std::size_t>(c)]}));
      }
    }
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto samples = bootstrap_sharpe_samples(r, 2, seed);
    ASSERT_EQ(samples.size(), 2u);
    for (double s : samples) {
      const bool found =
          std::any_of(possible.begin(), possible.end(), [&](double p) { return std::abs(p - s) < 1e-12; });
      EXPECT_TRUE(found) << s;
    }
    EXPECT_NEAR(bootstrap_sharpe_se(r, 2, seed), std::abs(samples[0] - samples[1]) / std::sqrt(2.0), 1e-12);
  }
}

TEST(Bootstrap, Deterministic) {
  const ReturnsPanel p = fixtures::iid_panel(1, 200, 4);
  std::vector<double> r(p.returns().col(0).data(), p.returns().col(0).data() + 200);
  EXPECT_EQ(bootstrap_sharpe_se(r, 300, 42), bootstrap_sharpe_se(r, 300, 42));
  EXPECT_NE(bootstrap_sharpe_se(r, 300, 42), bootstrap_sharpe_se(r, 300, 43));
}

TEST(Bootstrap, NearAsymptoticStandardError) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0004, 0.01);
  std::vector<double> r(1259);
  for (auto& v : r) v = z(rng);
  const SharpeEstimate s = sharpe(r);
  const double daily = s.daily_mean / s.daily_std;
  const double asymptotic = std::sqrt((1.0 + daily * daily / 2.0) / 1259.0) * std::sqrt(252.0);
  const double se = bootstrap_sharpe_se(r, 1000, 7);
  EXPECT_NEAR(se / asymptotic, 1.0, 0.15);
}

TEST(Bootstrap, DegenerateSeriesHitsCap) {
  const std::vector<double> constant(5, 0.01);
  EXPECT_THROW(bootstrap_sharpe_samples(constant, 10, 1), BootstrapDegenerate);
  EXPECT_NO_THROW(bootstrap_sharpe_samples(std::vector<double>{0.01, 0.02}, 10, 1));
}
