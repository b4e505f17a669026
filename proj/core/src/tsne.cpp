#include "clustfolio/tsne.hpp"

#include "clustfolio/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace clustfolio {

namespace {

constexpr int kMaxBracketSteps = 200;

// Fills `row` with the Gaussian conditional distribution for bandwidth sigma
// and returns its perplexity. `shifted` holds d_ij - min_k d_ik (self excluded,
// marked negative).
double eval_row(const Eigen::RowVectorXd& shifted, double sigma, Eigen::RowVectorXd& row) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < shifted.size(); ++j) {
    if (shifted[j] < 0.0) {
      row[j] = 0.0;
      continue;
    }
    row[j] = std::exp(-shifted[j] * inv);
    sum += row[j];
  }
  row /= sum;
  return std::exp2(row_entropy_bits(row));
}

Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  const double d = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    out.row(i).array() -= mean;
    if (x.cols() > 1) {
      const double sd = std::sqrt(out.row(i).squaredNorm() / (d - 1.0));
      if (sd > 0.0) out.row(i) /= sd;
    }
  }
  return out;
}

Eigen::MatrixXd gradient_scaled(const Eigen::MatrixXd& p, double p_scale, const LowDimAffinities& low,
                                const Eigen::MatrixXd& y) {
  Eigen::MatrixXd w = (p_scale * p - low.q).cwiseProduct(low.kernel);
  w.diagonal().setZero();
  const Eigen::VectorXd row_sums = w.rowwise().sum();
  return 4.0 * (row_sums.asDiagonal() * y - w * y);
}

}  // namespace

void TsneConfig::validate(std::size_t n) const {
  if (out_dim != 2 && out_dim != 3) throw InvalidConfig(fmt::format("out_dim must be 2 or 3, got {}", out_dim));
  if (max_iter < 1) throw InvalidConfig("max_iter must be positive");
  if (early_exaggeration_iters < 0 || max_iter < early_exaggeration_iters) {
    throw InvalidConfig("max_iter must be at least early_exaggeration_iters");
  }
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning_rate must be positive");
  if (momentum_initial < 0.0 || momentum_initial >= 1.0 || momentum_final < 0.0 || momentum_final >= 1.0) {
    throw InvalidConfig("momentum values must lie in [0, 1)");
  }
  if (momentum_switch_iter < 0) throw InvalidConfig("momentum_switch_iter must be non-negative");
  if (!(early_exaggeration_factor > 0.0)) throw InvalidConfig("early_exaggeration_factor must be positive");
  if (!(bandwidth_tolerance > 0.0) || bandwidth_max_iters < 1) {
    throw InvalidConfig("bandwidth tolerance and iteration cap must be positive");
  }
  if (!(perplexity > 1.0) || perplexity > static_cast<double>(n) - 1.0) {
    throw InvalidPerplexity(fmt::format("perplexity {} outside (1, {}] for {} points", perplexity, n - 1, n));
  }
}

Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) throw InvalidInput("input points contain non-finite values");
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd xt = x.transpose();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (xt.col(i) - xt.col(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double row_entropy_bits(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    const double p = row[j];
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

HighDimAffinities calibrate_bandwidths(const Eigen::MatrixXd& sq_distances, double perplexity, double tolerance,
                                       int max_iters) {
  const Eigen::Index n = sq_distances.rows();
  if (n < 2 || sq_distances.cols() != n) throw InvalidInput("distance matrix must be square with n >= 2");
  if (!(perplexity > 1.0) || perplexity > static_cast<double>(n) - 1.0) {
    throw InvalidPerplexity(fmt::format("perplexity {} outside (1, {}] for {} points", perplexity, n - 1, n));
  }

  HighDimAffinities out;
  out.conditional = Eigen::MatrixXd::Zero(n, n);
  out.bandwidths = Eigen::VectorXd::Zero(n);

  Eigen::RowVectorXd shifted(n);
  Eigen::RowVectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, sq_distances(i, j));
    }
    for (Eigen::Index j = 0; j < n; ++j) shifted[j] = (j == i) ? -1.0 : sq_distances(i, j) - dmin;

    auto within = [&](double perp) { return std::abs(perp - perplexity) <= tolerance; };

    double sigma = 1.0;
    double perp = eval_row(shifted, sigma, row);
    bool converged = within(perp);

    if (!converged) {
      // Perplexity increases with sigma: find [lo, hi] with perp(lo) < target < perp(hi).
      double lo = sigma;
      double hi = sigma;
      bool bracketed = false;
      if (perp < perplexity) {
        for (int s = 0; s < kMaxBracketSteps; ++s) {
          lo = hi;
          hi *= 2.0;
          perp = eval_row(shifted, hi, row);
          sigma = hi;
          if (within(perp)) {
            converged = true;
            break;
          }
          if (perp > perplexity) {
            bracketed = true;
            break;
          }
        }
      } else {
        for (int s = 0; s < kMaxBracketSteps; ++s) {
          hi = lo;
          lo *= 0.5;
          perp = eval_row(shifted, lo, row);
          sigma = lo;
          if (within(perp)) {
            converged = true;
            break;
          }
          if (perp < perplexity) {
            bracketed = true;
            break;
          }
        }
      }

      if (bracketed) {
        for (int it = 0; it < max_iters; ++it) {
          sigma = 0.5 * (lo + hi);
          perp = eval_row(shifted, sigma, row);
          if (within(perp)) {
            converged = true;
            break;
          }
          (perp < perplexity ? lo : hi) = sigma;
        }
      }
    }

    if (!converged) out.unconverged_rows.push_back(static_cast<std::size_t>(i));
    out.conditional.row(i) = row;
    out.bandwidths[i] = sigma;
  }
  return out;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& conditional) {
  const double n = static_cast<double>(conditional.rows());
  Eigen::MatrixXd joint = (conditional + conditional.transpose()) / (2.0 * n);
  joint.diagonal().setZero();
  return joint;
}

LowDimAffinities low_dim_affinities(const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows();
  LowDimAffinities out;
  out.kernel = Eigen::MatrixXd::Zero(n, n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double k = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      out.kernel(i, j) = k;
      out.kernel(j, i) = k;
      sum += 2.0 * k;
    }
  }
  out.kernel_sum = sum;
  out.q = out.kernel / sum;
  return out;
}

double kl_cost(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  double c = 0.0;
  const Eigen::Index n = p.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const double pij = p(i, j);
      if (pij > 0.0) c += pij * std::log(pij / std::max(q(i, j), kQFloor));
    }
  }
  return c;
}

Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& p, const LowDimAffinities& low, const Eigen::MatrixXd& y) {
  return gradient_scaled(p, 1.0, low, y);
}

Eigen::MatrixXd initial_map_points(std::size_t n, int out_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1e-4);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), out_dim);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index d = 0; d < y.cols(); ++d) y(i, d) = normal(rng);
  }
  return y;
}

Embedding run_tsne(const Eigen::MatrixXd& x, const TsneConfig& config) {
  return run_tsne(x, config, initial_map_points(static_cast<std::size_t>(x.rows()), config.out_dim, config.seed));
}

Embedding run_tsne(const Eigen::MatrixXd& x, const TsneConfig& config, const Eigen::MatrixXd& initial_points) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 3) throw InvalidInput("t-SNE needs at least 3 points");
  config.validate(n);
  if (initial_points.rows() != x.rows() || initial_points.cols() != config.out_dim) {
    throw InvalidInput("initial map points have the wrong shape");
  }

  const Eigen::MatrixXd d = pairwise_squared_distances(config.standardize ? standardize_rows(x) : x);
  HighDimAffinities aff =
      calibrate_bandwidths(d, config.perplexity, config.bandwidth_tolerance, config.bandwidth_max_iters);
  const Eigen::MatrixXd p = symmetrize(aff.conditional);

  Eigen::MatrixXd y = initial_points;
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(y.rows(), y.cols());
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(y.rows(), y.cols());

  Embedding out;
  out.cost_trace.reserve(static_cast<std::size_t>(config.max_iter));

  for (int it = 0; it < config.max_iter; ++it) {
    const LowDimAffinities low = low_dim_affinities(y);
    const double cost = kl_cost(p, low.q);
    if (!std::isfinite(cost)) throw DivergedError(fmt::format("t-SNE cost became non-finite at iteration {}", it));
    out.cost_trace.push_back(cost);

    const double exaggeration = it < config.early_exaggeration_iters ? config.early_exaggeration_factor : 1.0;
    const Eigen::MatrixXd grad = gradient_scaled(p, exaggeration, low, y);
    const double momentum = it < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;

    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        double& g = gains(i, c);
        // grow while the step keeps going downhill, shrink on reversal
        g = ((grad(i, c) > 0.0) != (update(i, c) > 0.0)) ? g + 0.2 : g * 0.8;
        g = std::max(g, 0.01);
      }
    }
    update = momentum * update - config.learning_rate * gains.cwiseProduct(grad);
    y += update;
    y.rowwise() -= y.colwise().mean();
    if (!y.allFinite()) throw DivergedError(fmt::format("t-SNE map points became non-finite at iteration {}", it));
  }

  out.final_cost = kl_cost(p, low_dim_affinities(y).q);
  if (!std::isfinite(out.final_cost)) throw DivergedError("t-SNE final cost is non-finite");
  out.points = std::move(y);
  out.config_used = config;
  out.bandwidths = std::move(aff.bandwidths);
  out.joint = p;
  out.unconverged_rows = std::move(aff.unconverged_rows);
  return out;
}

}  // namespace clustfolio
