#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace clustfolio {

/// Exact (O(n^2)) t-SNE settings. Defaults follow the usual reference
/// implementation conventions.
struct TsneConfig {
  double perplexity = 30.0;
  int out_dim = 2;
  int max_iter = 1000;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  double early_exaggeration_factor = 12.0;
  int early_exaggeration_iters = 250;
  std::uint64_t seed = 0;
  double bandwidth_tolerance = 1e-5;
  int bandwidth_max_iters = 50;
  /// z-score each input row (one company's series) before computing distances
  bool standardize = false;

  /// Throws InvalidConfig / InvalidPerplexity for an input of `n` points.
  void validate(std::size_t n) const;
};

/// High-dimensional similarity distributions and the per-row Gaussian widths
/// that produced them.
struct HighDimAffinities {
  Eigen::MatrixXd conditional;  ///< row i holds p_{j|i}
  Eigen::MatrixXd joint;        ///< symmetric p_{ij}; empty until symmetrized
  Eigen::VectorXd bandwidths;   ///< sigma_i
  /// Rows whose search ended without reaching the tolerance.
  std::vector<std::size_t> unconverged_rows;
};

struct LowDimAffinities {
  Eigen::MatrixXd q;       ///< normalized Student-t similarities, zero diagonal
  Eigen::MatrixXd kernel;  ///< (1 + |y_i - y_j|^2)^-1, zero diagonal
  double kernel_sum = 0.0;
};

struct Embedding {
  Eigen::MatrixXd points;  ///< n x out_dim
  double final_cost = 0.0;
  std::vector<double> cost_trace;  ///< KL against the un-exaggerated P, one per iteration
  TsneConfig config_used;
  Eigen::VectorXd bandwidths;
  Eigen::MatrixXd joint;
  std::vector<std::size_t> unconverged_rows;
};

/// Floor applied to q_ij inside logarithms.
inline constexpr double kQFloor = 1e-12;

Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& x);

/// Shannon entropy (bits) of one probability row, skipping zero entries.
double row_entropy_bits(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Per-row search for sigma_i so that 2^H(P_i) matches `perplexity`.
/// The bracket starts at sigma = 1 and is grown or shrunk by factors of two,
/// then bisected for at most `max_iters` steps.
HighDimAffinities calibrate_bandwidths(const Eigen::MatrixXd& sq_distances, double perplexity, double tolerance,
                                       int max_iters);

/// p_ij = (p_{j|i} + p_{i|j}) / 2n
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& conditional);

LowDimAffinities low_dim_affinities(const Eigen::MatrixXd& y);

double kl_cost(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

/// Exact gradient of kl_cost with respect to the map points.
Eigen::MatrixXd kl_gradient(const Eigen::MatrixXd& p, const LowDimAffinities& low, const Eigen::MatrixXd& y);

/// Seeded isotropic Gaussian start, standard deviation 1e-4.
Eigen::MatrixXd initial_map_points(std::size_t n, int out_dim, std::uint64_t seed);

/// Rows of `x` are points. Deterministic for fixed (x, config).
Embedding run_tsne(const Eigen::MatrixXd& x, const TsneConfig& config);

/// Same as above but starting from caller-provided map points.
Embedding run_tsne(const Eigen::MatrixXd& x, const TsneConfig& config, const Eigen::MatrixXd& initial_points);

}  // namespace clustfolio
