#pragma once

#include "clustfolio/data.hpp"
#include "clustfolio/spectral.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clustfolio {

/// Trading days per year; used for annualization and epoch length.
inline constexpr double kTradingDaysPerYear = 252.0;

struct MomentEstimates {
  Eigen::VectorXd mu;     ///< per-day sample means
  Eigen::MatrixXd sigma;  ///< per-day^2 sample covariance, divisor window_len - 1
  std::size_t window_len = 0;
  std::vector<std::string> basis;
};

struct WeightVector {
  Eigen::VectorXd weights;
  std::vector<std::string> basis;
};

struct TangencyResult {
  WeightVector weights;
  /// The covariance needed the ridge fallback before it factorized.
  bool ridge_applied = false;
};

struct SharpeEstimate {
  double annualized_sharpe = 0.0;
  double daily_mean = 0.0;
  double daily_std = 0.0;
  std::size_t n_obs = 0;
  std::optional<double> bootstrap_se;
  std::optional<std::size_t> bootstrap_reps;
};

/// Column g = row-wise mean of the member columns of group g (equally
/// weighted, rebalanced daily). Columns are named G0, G1, ...
ReturnsPanel group_returns(const ReturnsPanel& panel, const Grouping& grouping);

/// Same computation on a bare matrix.
Eigen::MatrixXd group_returns(const Eigen::MatrixXd& returns, const Grouping& grouping);

/// Sample moments over the trailing `window_len` rows.
MomentEstimates estimate_moments(const ReturnsPanel& panel, std::size_t window_len);
MomentEstimates estimate_moments(const Eigen::Ref<const Eigen::MatrixXd>& returns, std::size_t window_len);

/// w = S^-1 mu / (1' S^-1 mu), solved through a Cholesky factorization. A
/// single asset gets weight one.
TangencyResult tangency_weights(const MomentEstimates& moments);

std::vector<double> portfolio_return_series(const ReturnsPanel& panel, const WeightVector& w);

SharpeEstimate sharpe(std::span<const double> returns);

/// Annualized Sharpe of every accepted bootstrap resample, in draw order.
std::vector<double> bootstrap_sharpe_samples(std::span<const double> returns, std::size_t reps, std::uint64_t seed);

/// Sample standard deviation of the resampled annualized Sharpe ratios.
double bootstrap_sharpe_se(std::span<const double> returns, std::size_t reps, std::uint64_t seed);

/// Sample standard deviation (divisor n - 1).
double sample_std(std::span<const double> values);

}  // namespace clustfolio
