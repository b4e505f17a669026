#include "clustfolio/spectral.hpp"

#include "clustfolio/errors.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace clustfolio {

namespace {

constexpr double kDegenerateRowNorm = 1e-12;

double sq_dist(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, std::size_t k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(x, i, centers, 0);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = unif(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    const auto ci = static_cast<Eigen::Index>(c);
    centers.row(ci) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, centers, ci));
    }
  }
  return centers;
}

KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centers, int max_iter) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  std::vector<std::size_t> labels(static_cast<std::size_t>(n), std::numeric_limits<std::size_t>::max());

  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = sq_dist(x, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      auto& li = labels[static_cast<std::size_t>(i)];
      if (li != static_cast<std::size_t>(best)) {
        li = static_cast<std::size_t>(best);
        changed = true;
      }
    }

    // Repair empty clusters by moving in the point farthest from its centroid.
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (auto l : labels) ++counts[l];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto li = labels[static_cast<std::size_t>(i)];
        if (counts[li] < 2) continue;
        const double d = sq_dist(x, i, centers, static_cast<Eigen::Index>(li));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) break;
      --counts[labels[static_cast<std::size_t>(far)]];
      labels[static_cast<std::size_t>(far)] = static_cast<std::size_t>(c);
      counts[static_cast<std::size_t>(c)] = 1;
      centers.row(c) = x.row(far);
      changed = true;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) += x.row(i);
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    if (!changed) break;
  }

  KMeansResult out;
  out.labels = std::move(labels);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.wcss += sq_dist(x, i, centers, static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(i)]));
  }
  return out;
}

}  // namespace

Grouping Grouping::from_labels(const std::vector<std::size_t>& labels) {
  Grouping g;
  std::map<std::size_t, std::size_t> remap;
  g.labels_.reserve(labels.size());
  for (auto l : labels) {
    auto [it, inserted] = remap.try_emplace(l, remap.size());
    if (inserted) g.sizes_.push_back(0);
    g.labels_.push_back(it->second);
    ++g.sizes_[it->second];
  }
  return g;
}

Grouping Grouping::singletons(std::size_t n) {
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i;
  return from_labels(labels);
}

Grouping Grouping::single_group(std::size_t n) { return from_labels(std::vector<std::size_t>(n, 0)); }

std::vector<std::vector<std::size_t>> Grouping::members() const {
  std::vector<std::vector<std::size_t>> out(group_count());
  for (std::size_t i = 0; i < labels_.size(); ++i) out[labels_[i]].push_back(i);
  return out;
}

AffinityMatrix affinity_from_embedding(const Eigen::MatrixXd& y, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidScale(fmt::format("kernel scale must be positive, got {}", scale));
  if (!y.allFinite()) throw InvalidInput("embedding contains non-finite coordinates");
  const Eigen::Index n = y.rows();
  AffinityMatrix a;
  a.scale = scale;
  a.values = Eigen::MatrixXd::Zero(n, n);
  const double inv = 1.0 / (2.0 * scale * scale);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-(y.row(i) - y.row(j)).squaredNorm() * inv);
      a.values(i, j) = v;
      a.values(j, i) = v;
    }
  }
  return a;
}

double median_heuristic_scale(const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((y.row(i) - y.row(j)).norm());
  }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  const double median = d.size() % 2 == 1 ? d[m] : 0.5 * (d[m - 1] + d[m]);
  return median > 0.0 ? median / std::sqrt(2.0) : 1.0;
}

Eigen::MatrixXd normalized_operator(const AffinityMatrix& a) {
  const Eigen::VectorXd degree = a.values.rowwise().sum();
  Eigen::VectorXd inv_sqrt(degree.size());
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    if (!(degree[i] > 0.0)) throw IsolatedVertex(static_cast<std::size_t>(i));
    inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  }
  Eigen::MatrixXd m = inv_sqrt.asDiagonal() * a.values * inv_sqrt.asDiagonal();
  // exact symmetry for the eigensolver
  m = 0.5 * (m + m.transpose()).eval();
  return m;
}

SpectralBasis spectral_basis(const AffinityMatrix& a, std::size_t k) {
  const auto n = static_cast<std::size_t>(a.values.rows());
  if (k < 1 || k > n) throw InvalidK(fmt::format("k = {} must lie in [1, {}]", k, n));
  const Eigen::MatrixXd m = normalized_operator(a);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed to converge");

  SpectralBasis out;
  out.degree = a.values.rowwise().sum();
  const auto kk = static_cast<Eigen::Index>(k);
  const auto nn = static_cast<Eigen::Index>(n);
  out.eigenvalues.resize(kk);
  out.eigenvectors.resize(nn, kk);
  for (Eigen::Index c = 0; c < kk; ++c) {
    // eigenvalues come back ascending
    out.eigenvalues[c] = solver.eigenvalues()[nn - 1 - c];
    out.eigenvectors.col(c) = solver.eigenvectors().col(nn - 1 - c);
  }
  out.rows = out.eigenvectors;
  for (Eigen::Index i = 0; i < nn; ++i) {
    const double norm = out.rows.row(i).norm();
    if (norm < kDegenerateRowNorm) {
      out.rows.row(i).setZero();
      out.rows(i, 0) = 1.0;
      out.degenerate_rows.push_back(static_cast<std::size_t>(i));
    } else {
      out.rows.row(i) /= norm;
    }
  }
  return out;
}

KMeansResult kmeans_rows(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t seed, int restarts, int max_iter) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (k < 1 || k > n) throw InvalidK(fmt::format("k = {} must lie in [1, {}]", k, n));
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    KMeansResult res = lloyd(rows, kmeanspp_init(rows, k, rng), max_iter);
    if (res.wcss < best.wcss) best = std::move(res);
  }
  return best;
}

SpectralResult spectral_cluster(const Eigen::MatrixXd& y, std::size_t k, std::uint64_t seed,
                                const SpectralOptions& options) {
  const auto n = static_cast<std::size_t>(y.rows());
  if (k < 1 || k > n) throw InvalidK(fmt::format("k = {} must lie in [1, {}]", k, n));
  const double scale = options.scale ? *options.scale : median_heuristic_scale(y);
  const AffinityMatrix a = affinity_from_embedding(y, scale);
  SpectralBasis basis = spectral_basis(a, k);
  const KMeansResult km = kmeans_rows(basis.rows, k, seed, options.kmeans_restarts, options.kmeans_max_iter);

  SpectralResult out;
  out.grouping = Grouping::from_labels(km.labels);
  out.requested_k = k;
  out.scale = scale;
  out.eigenvalues = std::move(basis.eigenvalues);
  out.degenerate_rows = std::move(basis.degenerate_rows);
  out.compacted = out.grouping.group_count() < k;
  return out;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) throw InvalidInput("partitions cover different numbers of items");
  const Grouping ga = Grouping::from_labels(a);
  const Grouping gb = Grouping::from_labels(b);
  const std::size_t ra = ga.group_count();
  const std::size_t rb = gb.group_count();
  std::vector<double> table(ra * rb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) table[ga.labels()[i] * rb + gb.labels()[i]] += 1.0;

  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0;
  for (double v : table) sum_ij += comb2(v);
  double sum_a = 0.0;
  for (auto s : ga.group_sizes()) sum_a += comb2(static_cast<double>(s));
  double sum_b = 0.0;
  for (auto s : gb.group_sizes()) sum_b += comb2(static_cast<double>(s));
  const double total = comb2(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial and identical in structure
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace clustfolio
