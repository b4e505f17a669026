#include <clustfolio/errors.hpp>
#include <clustfolio/spectral.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "support/synthetic.hpp"

using namespace clustfolio;

namespace {

Eigen::MatrixXd random_points(Eigen::Index n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = z(rng);
    y(i, 1) = z(rng);
  }
  return y;
}

Eigen::MatrixXd three_centers(double spacing) {
  Eigen::MatrixXd c(3, 2);
  c << 0, 0, spacing, 0, spacing / 2, spacing * std::sqrt(3.0) / 2;
  return c;
}

AffinityMatrix block_affinity(const std::vector<std::size_t>& sizes) {
  const auto n = static_cast<Eigen::Index>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  AffinityMatrix a;
  a.values = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index start = 0;
  for (auto s : sizes) {
    const auto m = static_cast<Eigen::Index>(s);
    a.values.block(start, start, m, m).setOnes();
    start += m;
  }
  a.values.diagonal().setZero();
  return a;
}

bool all_distinct(const std::vector<std::size_t>& labels) {
  return std::set<std::size_t>(labels.begin(), labels.end()).size() == labels.size();
}

}  // namespace

TEST(Grouping, CanonicalLabels) {
  const Grouping g = Grouping::from_labels({7, 7, 2, 9, 2});
  EXPECT_EQ(g.labels(), (std::vector<std::size_t>{0, 0, 1, 2, 1}));
  EXPECT_EQ(g.group_count(), 3u);
  EXPECT_EQ(g.group_sizes(), (std::vector<std::size_t>{2, 2, 1}));
  EXPECT_EQ(g, Grouping::from_labels({1, 1, 0, 5, 0}));
  const auto m = g.members();
  EXPECT_EQ(m[1], (std::vector<std::size_t>{2, 4}));
}

TEST(Grouping, SpecialGroupings) {
  EXPECT_EQ(Grouping::singletons(4).labels(), (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(Grouping::singletons(4), Grouping::from_labels({3, 2, 1, 0}));
  EXPECT_EQ(Grouping::single_group(3).group_sizes(), (std::vector<std::size_t>{3}));
}

TEST(AffinityFromEmbedding, CoincidentPointsGiveOne) {
  Eigen::MatrixXd y(3, 2);
  y << 1, 2, 1, 2, 5, 5;
  const AffinityMatrix a = affinity_from_embedding(y, 0.7);
  EXPECT_EQ(a.values(0, 1), 1.0);
  EXPECT_EQ(a.values(0, 0), 0.0);
}

TEST(AffinityFromEmbedding, DistanceScaleRootTwoGivesInverseE) {
  const double s = 1.3;
  Eigen::MatrixXd y(2, 2);
  y << 0, 0, s * std::sqrt(2.0), 0;
  EXPECT_NEAR(affinity_from_embedding(y, s).values(0, 1), std::exp(-1.0), 1e-15);
}

TEST(AffinityFromEmbedding, MatchesBruteForce) {
  const Eigen::MatrixXd y = random_points(6, 4);
  const double s = 0.9;
  const AffinityMatrix a = affinity_from_embedding(y, s);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double dx = y(i, 0) - y(j, 0);
      const double dy = y(i, 1) - y(j, 1);
      const double expected = i == j ? 0.0 : std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
      EXPECT_NEAR(a.values(i, j), expected, 1e-12);
    }
  }
  EXPECT_EQ(a.values, a.values.transpose());
  EXPECT_TRUE((a.values.array() >= 0.0).all() && (a.values.array() <= 1.0).all());
}

TEST(AffinityFromEmbedding, RigidMotionInvariant) {
  const Eigen::MatrixXd y = random_points(9, 5);
  const double theta = 0.83;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::MatrixXd moved = y * rot.transpose();
  moved.rowwise() += Eigen::RowVector2d(3.5, -11.0);
  const double s = median_heuristic_scale(y);
  EXPECT_LT((affinity_from_embedding(y, s).values - affinity_from_embedding(moved, s).values).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_NEAR(median_heuristic_scale(moved), s, 1e-12);
}

TEST(AffinityFromEmbedding, RejectsBadScale) {
  const Eigen::MatrixXd y = random_points(3, 1);
  EXPECT_THROW(affinity_from_embedding(y, 0.0), InvalidScale);
  EXPECT_THROW(affinity_from_embedding(y, -1.0), InvalidScale);
  EXPECT_THROW(affinity_from_embedding(y, std::nan("")), InvalidScale);
}

TEST(MedianHeuristic, HandComputed) {
  Eigen::MatrixXd y(3, 2);
  y << 0, 0, 3, 0, 0, 4;  // distances 3, 4, 5
  EXPECT_NEAR(median_heuristic_scale(y), 4.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(median_heuristic_scale(Eigen::MatrixXd::Zero(4, 2)), 1.0);
}

TEST(SpectralBasis, TwoCliquesHaveUnitEigenvalues) {
  const SpectralBasis b = spectral_basis(block_affinity({4, 6}), 2);
  EXPECT_NEAR(b.eigenvalues[0], 1.0, 1e-9);
  EXPECT_NEAR(b.eigenvalues[1], 1.0, 1e-9);
}

TEST(SpectralBasis, EigenpairResidualAndOrthogonality) {
  const Eigen::MatrixXd y = random_points(40, 6);
  const AffinityMatrix a = affinity_from_embedding(y, median_heuristic_scale(y));
  const SpectralBasis b = spectral_basis(a, 5);
  // operator rebuilt here from the degree vector
  Eigen::VectorXd d(40);
  for (int i = 0; i < 40; ++i) d[i] = a.values.row(i).sum();
  Eigen::MatrixXd m(40, 40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) m(i, j) = a.values(i, j) / std::sqrt(d[i] * d[j]);
  }
  for (int c = 0; c < 5; ++c) {
    const Eigen::VectorXd v = b.eigenvectors.col(c);
    EXPECT_LT((m * v - b.eigenvalues[c] * v).cwiseAbs().maxCoeff(), 1e-8);
    if (c > 0) EXPECT_LE(b.eigenvalues[c], b.eigenvalues[c - 1]);
  }
  const Eigen::MatrixXd gram = b.eigenvectors.transpose() * b.eigenvectors;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(b.rows.row(i).norm(), 1.0, 1e-12);
  EXPECT_LT((b.degree - d).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SpectralBasis, EigenvaluesWithinUnitInterval) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd y = random_points(25, 30 + seed);
    const AffinityMatrix a = affinity_from_embedding(y, 0.2 + 0.3 * static_cast<double>(seed));
    const SpectralBasis b = spectral_basis(a, 25);
    EXPECT_LE(b.eigenvalues.maxCoeff(), 1.0 + 1e-9);
    EXPECT_GE(b.eigenvalues.minCoeff(), -1.0 - 1e-9);
  }
}

TEST(SpectralBasis, LeadingVectorOnConnectedGraph) {
  const Eigen::MatrixXd y = random_points(12, 7);
  const SpectralBasis b = spectral_basis(affinity_from_embedding(y, median_heuristic_scale(y)), 1);
  EXPECT_NEAR(b.eigenvalues[0], 1.0, 1e-9);
  for (int i = 1; i < 12; ++i) EXPECT_NEAR(b.rows(i, 0), b.rows(0, 0), 1e-12);
  EXPECT_NEAR(std::abs(b.rows(0, 0)), 1.0, 1e-12);
}

TEST(SpectralBasis, Errors) {
  AffinityMatrix a = block_affinity({3, 3});
  EXPECT_THROW(spectral_basis(a, 7), InvalidK);
  EXPECT_THROW(spectral_basis(a, 0), InvalidK);
  a.values.row(2).setZero();
  a.values.col(2).setZero();
  try {
    spectral_basis(a, 2);
    FAIL() << "expected IsolatedVertex";
  } catch (const IsolatedVertex& e) {
    EXPECT_EQ(e.vertex(), 2u);
  }
}

TEST(KMeans, RecoversSeparatedBlobs) {
  Eigen::MatrixXd centers(2, 2);
  centers << 0, 0, 50, 50;
  std::vector<std::size_t> truth;
  const Eigen::MatrixXd x = fixtures::gaussian_blobs(centers, 10, 1.0, 3, &truth);
  const KMeansResult r = kmeans_rows(x, 2, 11, 10);
  EXPECT_EQ(adjusted_rand_index(r.labels, truth), 1.0);
}

TEST(KMeans, OneClusterPerPoint) {
  const Eigen::MatrixXd x = random_points(7, 9);
  const KMeansResult r = kmeans_rows(x, 7, 1, 3);
  EXPECT_TRUE(all_distinct(r.labels));
  EXPECT_EQ(r.wcss, 0.0);
}

TEST(KMeans, DuplicatesShareLabel) {
  Eigen::MatrixXd x = random_points(15, 10);
  x.row(3) = x.row(11);
  x.row(8) = x.row(11);
  for (std::size_t k = 2; k <= 6; ++k) {
    const KMeansResult r = kmeans_rows(x, k, 5 + k, 10);
    EXPECT_EQ(r.labels[3], r.labels[11]);
    EXPECT_EQ(r.labels[8], r.labels[11]);
  }
}

TEST(KMeans, WcssMatchesLabels) {
  const Eigen::MatrixXd x = random_points(30, 12);
  const KMeansResult r = kmeans_rows(x, 4, 2, 5);
  double wcss = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    Eigen::RowVector2d mean = Eigen::RowVector2d::Zero();
    int count = 0;
    for (int i = 0; i < 30; ++i) {
      if (r.labels[static_cast<std::size_t>(i)] == c) {
        mean += x.row(i);
        ++count;
      }
    }
    ASSERT_GT(count, 0);
    mean /= count;
    for (int i = 0; i < 30; ++i) {
      if (r.labels[static_cast<std::size_t>(i)] == c) wcss += (x.row(i) - mean).squaredNorm();
    }
  }
  EXPECT_NEAR(r.wcss, wcss, 1e-10);
}

TEST(KMeans, MoreRestartsNeverWorse) {
  const Eigen::MatrixXd x = random_points(40, 13);
  EXPECT_LE(kmeans_rows(x, 5, 4, 20).wcss, kmeans_rows(x, 5, 4, 1).wcss + 1e-12);
}

TEST(AdjustedRandIndex, HandComputed) {
  EXPECT_EQ(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 2, 2}), 1.0);
  // contingency all ones: index 0, expected 2*2/6, max 2
  EXPECT_NEAR(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}), -0.5, 1e-15);
}

TEST(SpectralCluster, ThreeBlobs) {
  std::vector<std::size_t> truth;
  const Eigen::MatrixXd y = fixtures::gaussian_blobs(three_centers(100.0), 12, 1.0, 21, &truth);
  const SpectralResult r = spectral_cluster(y, 3, 5, SpectralOptions{.scale = 1.0});
  EXPECT_EQ(adjusted_rand_index(r.grouping.labels(), truth), 1.0);
  EXPECT_EQ(r.grouping.group_count(), 3u);
  EXPECT_FALSE(r.compacted);

  const SpectralResult h = spectral_cluster(y, 3, 5);
  EXPECT_EQ(adjusted_rand_index(h.grouping.labels(), truth), 1.0);
}

TEST(SpectralCluster, SingleGroup) {
  const Eigen::MatrixXd y = random_points(10, 2);
  const SpectralResult r = spectral_cluster(y, 1, 3);
  EXPECT_EQ(r.grouping, Grouping::single_group(10));
}

TEST(SpectralCluster, Deterministic) {
  const Eigen::MatrixXd y = random_points(30, 3);
  const SpectralResult a = spectral_cluster(y, 4, 77);
  const SpectralResult b = spectral_cluster(y, 4, 77);
  EXPECT_EQ(a.grouping, b.grouping);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ(a.scale, b.scale);
}

TEST(SpectralCluster, GroupingInvariants) {
  const Eigen::MatrixXd y = random_points(25, 8);
  for (std::size_t k = 1; k <= 8; ++k) {
    const SpectralResult r = spectral_cluster(y, k, k);
    const auto& sizes = r.grouping.group_sizes();
    EXPECT_LE(r.grouping.group_count(), k);
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), 25u);
    EXPECT_TRUE(std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
    EXPECT_EQ(r.compacted, r.grouping.group_count() < k);
  }
}

TEST(SpectralCluster, RelabelingInvariant) {
  std::vector<std::size_t> truth;
  const Eigen::MatrixXd y = fixtures::gaussian_blobs(three_centers(8.0), 6, 1.0, 14, &truth);
  const auto n = static_cast<std::size_t>(y.rows());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  Eigen::MatrixXd yp(y.rows(), 2);
  for (std::size_t i = 0; i < n; ++i) yp.row(static_cast<Eigen::Index>(i)) = y.row(static_cast<Eigen::Index>(perm[i]));

  const SpectralResult a = spectral_cluster(y, 3, 9);
  const SpectralResult b = spectral_cluster(yp, 3, 9);
  std::vector<std::size_t> back(n);
  for (std::size_t i = 0; i < n; ++i) back[perm[i]] = b.grouping.labels()[i];
  EXPECT_EQ(adjusted_rand_index(a.grouping.labels(), back), 1.0);
}

TEST(SpectralCluster, RecoversConnectedComponents) {
  // Components far enough apart that every cross entry underflows to zero.
  for (std::size_t k = 2; k <= 5; ++k) {
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), 2);
    for (std::size_t c = 0; c < k; ++c) centers.row(static_cast<Eigen::Index>(c)) << 1000.0 * static_cast<double>(c), 0;
    std::vector<std::size_t> truth;
    const Eigen::MatrixXd y = fixtures::gaussian_blobs(centers, 5, 0.5, k, &truth);
    const AffinityMatrix a = affinity_from_embedding(y, 1.0);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.rows(); ++j) {
        if (truth[static_cast<std::size_t>(i)] != truth[static_cast<std::size_t>(j)]) ASSERT_EQ(a.values(i, j), 0.0);
      }
    }
    const SpectralResult r = spectral_cluster(y, k, 2, SpectralOptions{.scale = 1.0});
    EXPECT_EQ(adjusted_rand_index(r.grouping.labels(), truth), 1.0) << "k=" << k;
  }
}

TEST(SpectralCluster, RecoversZeroOneBlocks) {
  const std::vector<std::size_t> sizes = {3, 5, 4};
  const AffinityMatrix a = block_affinity(sizes);
  const SpectralBasis b = spectral_basis(a, 3);
  const KMeansResult r = kmeans_rows(b.rows, 3, 1, 10);
  EXPECT_EQ(Grouping::from_labels(r.labels), Grouping::from_labels({0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2}));
}
