#include "clustfolio/portfolio.hpp"

#include "clustfolio/errors.hpp"

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include <cmath>
#include <random>

namespace clustfolio {

namespace {

constexpr double kDegenerateDenominator = 1e-12;
constexpr double kRidgeFactor = 1e-8;

struct MeanStd {
  double mean;
  double std;
};

MeanStd mean_std(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

// Treats rounding noise around a constant series as zero variance.
bool zero_variance(const MeanStd& ms) { return !(ms.std > 1e-12 * std::abs(ms.mean)); }

}  // namespace

Eigen::MatrixXd group_returns(const Eigen::MatrixXd& returns, const Grouping& grouping) {
  if (grouping.size() != static_cast<std::size_t>(returns.cols())) {
    throw GroupingMismatch(fmt::format("grouping covers {} assets but the panel has {}", grouping.size(), returns.cols()));
  }
  const auto g = static_cast<Eigen::Index>(grouping.group_count());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(returns.rows(), g);
  for (std::size_t j = 0; j < grouping.size(); ++j) {
    out.col(static_cast<Eigen::Index>(grouping.labels()[j])) += returns.col(static_cast<Eigen::Index>(j));
  }
  for (Eigen::Index c = 0; c < g; ++c) {
    out.col(c) /= static_cast<double>(grouping.group_sizes()[static_cast<std::size_t>(c)]);
  }
  return out;
}

ReturnsPanel group_returns(const ReturnsPanel& panel, const Grouping& grouping) {
  Eigen::MatrixXd grouped = group_returns(panel.returns(), grouping);
  std::vector<std::string> names;
  names.reserve(grouping.group_count());
  for (std::size_t c = 0; c < grouping.group_count(); ++c) names.push_back(fmt::format("G{}", c));
  return ReturnsPanel(panel.dates(), std::move(names), std::move(grouped));
}

MomentEstimates estimate_moments(const Eigen::Ref<const Eigen::MatrixXd>& returns, std::size_t window_len) {
  if (window_len < 2) throw InvalidInput("moment window must hold at least 2 observations");
  if (static_cast<std::size_t>(returns.rows()) < window_len) {
    throw InsufficientData(fmt::format("need {} rows for moment estimation, have {}", window_len, returns.rows()));
  }
  const auto w = static_cast<Eigen::Index>(window_len);
  const auto window = returns.bottomRows(w);
  MomentEstimates m;
  m.window_len = window_len;
  // deviations taken about the first row, then about their mean
  const Eigen::RowVectorXd origin = window.row(0);
  const Eigen::MatrixXd shifted = window.rowwise() - origin;
  const Eigen::RowVectorXd offset = shifted.colwise().mean();
  m.mu = (origin + offset).transpose();
  const Eigen::MatrixXd centered = shifted.rowwise() - offset;
  m.sigma = (centered.transpose() * centered) / static_cast<double>(window_len - 1);
  return m;
}

MomentEstimates estimate_moments(const ReturnsPanel& panel, std::size_t window_len) {
  MomentEstimates m = estimate_moments(panel.returns(), window_len);
  m.basis = panel.tickers();
  return m;
}

TangencyResult tangency_weights(const MomentEstimates& moments) {
  const Eigen::Index n = moments.mu.size();
  if (n < 1 || moments.sigma.rows() != n || moments.sigma.cols() != n) {
    throw InvalidInput("moment estimates have inconsistent shapes");
  }
  TangencyResult out;
  out.weights.basis = moments.basis;
  if (n == 1) {
    // the budget constraint alone pins a single asset
    out.weights.weights = Eigen::VectorXd::Ones(1);
    return out;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(moments.sigma);
  Eigen::VectorXd x;
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    x = llt.solve(moments.mu);
    ok = x.allFinite();
  }
  if (!ok) {
    const double ridge = kRidgeFactor * moments.sigma.trace() / static_cast<double>(n);
    Eigen::MatrixXd regularized = moments.sigma;
    regularized.diagonal().array() += ridge;
    llt.compute(regularized);
    if (!(ridge > 0.0) || llt.info() != Eigen::Success) {
      throw SingularCovariance("covariance matrix is not positive definite even after ridge regularization");
    }
    x = llt.solve(moments.mu);
    if (!x.allFinite()) throw SingularCovariance("tangency solve produced non-finite values");
    out.ridge_applied = true;
  }
  const double denom = x.sum();
  if (std::abs(denom) < kDegenerateDenominator) {
    throw DegenerateTangency(fmt::format("1'S^-1 mu = {} is too close to zero", denom));
  }
  out.weights.weights = x / denom;
  return out;
}

std::vector<double> portfolio_return_series(const ReturnsPanel& panel, const WeightVector& w) {
  if (static_cast<std::size_t>(w.weights.size()) != panel.cols() ||
      (!w.basis.empty() && w.basis != panel.tickers())) {
    throw BasisMismatch("weight basis does not match the panel columns");
  }
  const Eigen::VectorXd r = panel.returns() * w.weights;
  return std::vector<double>(r.data(), r.data() + r.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) throw InsufficientData("standard deviation needs at least 2 values");
  return mean_std(values).std;
}

SharpeEstimate sharpe(std::span<const double> returns) {
  if (returns.size() < 2) throw InsufficientData("Sharpe ratio needs at least 2 returns");
  const MeanStd ms = mean_std(returns);
  if (zero_variance(ms)) throw ZeroVariance("return series has zero variance");
  SharpeEstimate s;
  s.daily_mean = ms.mean;
  s.daily_std = ms.std;
  s.n_obs = returns.size();
  s.annualized_sharpe = ms.mean / ms.std * std::sqrt(kTradingDaysPerYear);
  return s;
}

std::vector<double> bootstrap_sharpe_samples(std::span<const double> returns, std::size_t reps, std::uint64_t seed) {
  if (returns.size() < 2) throw InsufficientData("bootstrap needs at least 2 returns");
  if (reps < 2) throw InvalidInput("bootstrap needs at least 2 repetitions");
  const std::size_t n = returns.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> draw(n);
  std::vector<double> out;
  out.reserve(reps);
  const std::size_t cap = 10 * reps;
  for (std::size_t attempt = 0; out.size() < reps; ++attempt) {
    if (attempt >= cap) {
      throw BootstrapDegenerate(fmt::format("only {} of {} resamples had nonzero variance after {} draws", out.size(),
                                            reps, cap));
    }
    for (auto& v : draw) v = returns[pick(rng)];
    const MeanStd ms = mean_std(draw);
    if (zero_variance(ms)) continue;
    out.push_back(ms.mean / ms.std * std::sqrt(kTradingDaysPerYear));
  }
  return out;
}

double bootstrap_sharpe_se(std::span<const double> returns, std::size_t reps, std::uint64_t seed) {
  const auto samples = bootstrap_sharpe_samples(returns, reps, seed);
  return sample_std(samples);
}

}  // namespace clustfolio
