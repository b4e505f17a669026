#pragma once

#include "clustfolio/data.hpp"
#include "clustfolio/portfolio.hpp"
#include "clustfolio/spectral.hpp"
#include "clustfolio/tsne.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clustfolio {

/**
 * Decision-engine settings.
 *
 * Every epoch of `reselect_every` test days re-runs the selection on the
 * trailing `train_len` training rows and `val_len` validation rows. One
 * t-SNE map is fit per grid perplexity on the training rows, each map is
 * clustered `clustering_restarts` times with independent seeds, and the
 * grouping with the best validation Sharpe ratio is kept for the epoch.
 * Tangency weights over the group sub-portfolios are re-estimated every day
 * on the trailing `est_window` rows.
 */
struct EngineConfig {
  std::vector<double> perplexity_grid = {3, 8, 13, 18, 23, 28, 33, 38, 43, 48, 53};
  std::size_t clustering_restarts = 30;
  std::vector<std::size_t> group_counts = {2,  3,  4,  5,  6,  7,  8,  9,  10, 11,
                                           12, 13, 14, 15, 16, 17, 18, 19, 20};
  std::size_t train_len = 1260;
  std::size_t val_len = 252;
  std::size_t est_window = 504;
  std::size_t reselect_every = 252;
  std::uint64_t master_seed = 0;
  std::size_t random_bench_reps = 100;
  std::size_t bootstrap_reps = 1000;

  /// Optimizer settings for every t-SNE fit; perplexity and seed are
  /// overwritten per grid point.
  TsneConfig tsne;
  int kmeans_restarts = 10;
  /// Maximum concurrent tasks. Results do not depend on this value.
  std::size_t jobs = 1;
  /// Optional progress sink (messages are human readable, one line each).
  std::function<void(const std::string&)> on_progress;

  void validate() const;
};

struct Candidate {
  double perplexity = 0.0;
  std::size_t perplexity_index = 0;
  std::size_t restart_index = 0;
  std::uint64_t restart_seed = 0;
  std::size_t g = 0;  ///< requested group count
  Grouping grouping;  ///< empty when clustering failed
  double val_sharpe = -std::numeric_limits<double>::infinity();
  std::string diagnostics;

  bool viable() const noexcept { return grouping.size() > 0; }
};

struct CandidateScore {
  double score = -std::numeric_limits<double>::infinity();
  std::string diagnostic;
};

/// One selection epoch. Indices count test points, not panel rows.
struct EpochRecord {
  std::size_t start = 0;
  std::size_t end = 0;  ///< one past the last test index
  std::optional<double> perplexity;
  std::optional<std::uint64_t> seed;
  std::size_t g = 0;  ///< groups actually used
  std::vector<std::size_t> group_sizes;
  std::vector<std::size_t> labels;
  std::optional<double> val_sharpe;
  std::string diagnostics;
};

struct BacktestReport {
  std::string strategy_name;
  std::size_t g = 0;  ///< group count shown in the summary
  std::vector<Date> test_dates;
  std::vector<double> test_returns;
  std::optional<SharpeEstimate> sharpe;
  std::vector<EpochRecord> epoch_log;
};

/// RND_g: the averaged report plus every repetition's statistics.
struct RandomBenchmarkReport {
  /// test_returns holds the day-by-day mean across repetitions; its epoch
  /// log is the first repetition's.
  BacktestReport averaged;
  double mean_sharpe = 0.0;
  std::optional<double> mean_bootstrap_se;
  std::vector<double> rep_sharpes;
  std::vector<double> rep_bootstrap_se;
};

/// Number of test points and epochs implied by a panel length.
std::size_t test_point_count(std::size_t rows, const EngineConfig& config);
std::size_t epoch_count(std::size_t rows, const EngineConfig& config);

/// One t-SNE map per grid perplexity on the rows of `train` (companies are
/// points, their training returns are coordinates).
std::vector<Embedding> compute_embeddings(const ReturnsPanel& train, const EngineConfig& config, std::size_t epoch);

/// |grid| x restarts spectral clusterings of the given maps into g groups.
std::vector<Candidate> enumerate_candidates(const std::vector<Embedding>& embeddings, std::size_t g,
                                            const EngineConfig& config, std::size_t epoch);
std::vector<Candidate> enumerate_candidates(const ReturnsPanel& train, std::size_t g, const EngineConfig& config);

/// Annualized Sharpe ratio of the validation days, each traded with tangency
/// weights estimated on the trailing est_window grouped rows. Degenerate
/// candidates score minus infinity with a diagnostic.
CandidateScore score_candidate(const Candidate& candidate, const ReturnsPanel& train, const ReturnsPanel& validation,
                               std::size_t est_window);

/// Best finite score; ties go to the lower perplexity, then the lower seed.
const Candidate& select_model(std::span<const Candidate> candidates);

/// Realized returns on rows [first, first + count) of `grouped`, each day
/// trading tangency weights from the est_window rows before it.
std::vector<double> rolling_tangency_returns(const Eigen::MatrixXd& grouped, std::size_t first, std::size_t count,
                                             std::size_t est_window, bool* ridge_applied = nullptr);

BacktestReport run_backtest_ts(const ReturnsPanel& panel, std::size_t g, const EngineConfig& config);

/// TS_g for every g in config.group_counts, sharing the per-epoch maps.
std::vector<BacktestReport> run_backtest_ts_all(const ReturnsPanel& panel, const EngineConfig& config);

/// Backtest with a caller-chosen grouping for each epoch (no selection).
BacktestReport run_backtest_with_groupings(const ReturnsPanel& panel, std::span<const Grouping> epoch_groupings,
                                           const EngineConfig& config, std::string name, std::size_t g_label);

BacktestReport run_benchmark_mw(const ReturnsPanel& panel, const EngineConfig& config);
BacktestReport run_benchmark_naive(const ReturnsPanel& panel, const EngineConfig& config);

/// Groups are the distinct leading `digits` characters of the industry code,
/// numbered in panel-column order.
Grouping industry_grouping(const std::vector<std::string>& tickers, const std::vector<CompanyMeta>& meta,
                           std::size_t digits);
BacktestReport run_benchmark_industry(const ReturnsPanel& panel, const std::vector<CompanyMeta>& meta,
                                      std::size_t digits, const EngineConfig& config);

/// Random groupings drawn to match `reference_sizes` (one size vector per
/// epoch, usually taken from the TS_g epoch log).
RandomBenchmarkReport run_benchmark_random(const ReturnsPanel& panel, std::size_t g, const EngineConfig& config,
                                           const std::vector<std::vector<std::size_t>>& reference_sizes);

/// Seeded uniformly random partition with the given group sizes.
Grouping random_grouping(const std::vector<std::size_t>& sizes, std::uint64_t seed);

/// Group sizes of every epoch in a report's log.
std::vector<std::vector<std::size_t>> epoch_group_sizes(const BacktestReport& report);

}  // namespace clustfolio
