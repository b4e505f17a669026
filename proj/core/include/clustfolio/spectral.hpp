#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace clustfolio {

/// Surjective assignment of n items to g groups. Labels are canonical: groups
/// are numbered in order of first appearance, so two label vectors describing
/// the same partition in the same item order compare equal.
class Grouping {
 public:
  Grouping() = default;

  /// Compacts arbitrary labels to 0..g-1 in first-appearance order.
  static Grouping from_labels(const std::vector<std::size_t>& labels);
  static Grouping singletons(std::size_t n);
  static Grouping single_group(std::size_t n);

  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  std::size_t group_count() const noexcept { return sizes_.size(); }
  const std::vector<std::size_t>& group_sizes() const noexcept { return sizes_; }
  std::size_t size() const noexcept { return labels_.size(); }

  /// Item indices of each group, ascending.
  std::vector<std::vector<std::size_t>> members() const;

  bool operator==(const Grouping&) const = default;

 private:
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> sizes_;
};

struct AffinityMatrix {
  Eigen::MatrixXd values;
  double scale = 1.0;
};

struct SpectralBasis {
  Eigen::VectorXd eigenvalues;   ///< k largest, descending
  Eigen::MatrixXd eigenvectors;  ///< n x k orthonormal columns of the normalized operator
  Eigen::MatrixXd rows;          ///< eigenvectors with each row scaled to unit length
  Eigen::VectorXd degree;
  std::vector<std::size_t> degenerate_rows;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  double wcss = 0.0;
};

struct SpectralOptions {
  std::optional<double> scale;  ///< unset: median heuristic
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
};

struct SpectralResult {
  Grouping grouping;
  std::size_t requested_k = 0;
  double scale = 0.0;
  Eigen::VectorXd eigenvalues;
  std::vector<std::size_t> degenerate_rows;
  /// true when k-means left groups empty and labels were compacted
  bool compacted = false;
};

/// A_ij = exp(-|y_i - y_j|^2 / (2 scale^2)), zero diagonal.
AffinityMatrix affinity_from_embedding(const Eigen::MatrixXd& y, double scale);

/// Median pairwise distance divided by sqrt(2); 1.0 if all points coincide.
double median_heuristic_scale(const Eigen::MatrixXd& y);

/// D^{-1/2} A D^{-1/2}. Throws IsolatedVertex on a zero-degree row.
Eigen::MatrixXd normalized_operator(const AffinityMatrix& a);

SpectralBasis spectral_basis(const AffinityMatrix& a, std::size_t k);

/// Lloyd iterations from seeded k-means++ starts; best of `restarts` by
/// within-cluster sum of squares.
KMeansResult kmeans_rows(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed, int restarts,
                         int max_iter = 300);

SpectralResult spectral_cluster(const Eigen::MatrixXd& y, std::size_t k, std::uint64_t seed,
                                const SpectralOptions& options = {});

/// Chance-corrected agreement of two partitions of the same items.
double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace clustfolio
