#include "clustfolio/engine.hpp"

#include "clustfolio/errors.hpp"
#include "clustfolio/parallel.hpp"
#include "clustfolio/seeds.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

namespace clustfolio {

namespace {

void progress(const EngineConfig& config, const std::string& message) {
  if (config.on_progress) config.on_progress(message);
}

std::uint64_t bootstrap_seed(const EngineConfig& config, const std::string& name, std::uint64_t rep = 0) {
  return derive_seed(config.master_seed, SeedRole::kBootstrap, hash_label(name), rep);
}

struct SharpeWithSe {
  std::optional<SharpeEstimate> sharpe;
  std::string diagnostic;
};

SharpeWithSe summarize_returns(const std::vector<double>& returns, std::size_t reps, std::uint64_t seed) {
  SharpeWithSe out;
  try {
    SharpeEstimate s = sharpe(returns);
    try {
      s.bootstrap_se = bootstrap_sharpe_se(returns, reps, seed);
      s.bootstrap_reps = reps;
    } catch (const Error& e) {
      out.diagnostic = fmt::format("bootstrap skipped: {}", e.what());
    }
    out.sharpe = s;
  } catch (const Error& e) {
    out.diagnostic = fmt::format("Sharpe ratio unavailable: {}", e.what());
  }
  return out;
}

EpochRecord epoch_record(std::size_t start, std::size_t end, const Grouping& grouping) {
  EpochRecord rec;
  rec.start = start;
  rec.end = end;
  rec.g = grouping.group_count();
  rec.group_sizes = grouping.group_sizes();
  rec.labels = grouping.labels();
  return rec;
}

void append_diagnostic(std::string& target, const std::string& message) {
  if (message.empty()) return;
  if (!target.empty()) target += "; ";
  target += message;
}

// Returns only; no Sharpe statistics.
BacktestReport backtest_groupings_raw(const ReturnsPanel& panel, std::span<const Grouping> epoch_groupings,
                                      const EngineConfig& config, std::string name, std::size_t g_label) {
  config.validate();
  const std::size_t n_test = test_point_count(panel.rows(), config);
  const std::size_t n_epochs = epoch_count(panel.rows(), config);
  if (epoch_groupings.size() != n_epochs) {
    throw SizeMismatch(fmt::format("{} epoch groupings supplied for {} epochs", epoch_groupings.size(), n_epochs));
  }

  BacktestReport report;
  report.strategy_name = std::move(name);
  report.g = g_label;
  report.test_returns.reserve(n_test);
  const std::size_t offset = config.train_len + config.val_len;
  for (std::size_t e = 0; e < n_epochs; ++e) {
    const std::size_t start = e * config.reselect_every;
    const std::size_t end = std::min(start + config.reselect_every, n_test);
    const Grouping& grouping = epoch_groupings[e];
    const std::size_t first_row = offset + start - config.est_window;
    const std::size_t rows = config.est_window + (end - start);
    const Eigen::MatrixXd grouped = group_returns(
        panel.returns().middleRows(static_cast<Eigen::Index>(first_row), static_cast<Eigen::Index>(rows)), grouping);
    bool ridge = false;
    const auto realized = rolling_tangency_returns(grouped, config.est_window, end - start, config.est_window, &ridge);
    report.test_returns.insert(report.test_returns.end(), realized.begin(), realized.end());

    EpochRecord rec = epoch_record(start, end, grouping);
    if (ridge) rec.diagnostics = "ridge fallback applied on at least one day";
    report.epoch_log.push_back(std::move(rec));
  }
  report.test_dates.assign(panel.dates().begin() + static_cast<std::ptrdiff_t>(offset), panel.dates().end());
  return report;
}

void finalize(BacktestReport& report, const EngineConfig& config) {
  auto stats = summarize_returns(report.test_returns, config.bootstrap_reps, bootstrap_seed(config, report.strategy_name));
  report.sharpe = stats.sharpe;
  if (!stats.diagnostic.empty() && !report.epoch_log.empty()) {
    append_diagnostic(report.epoch_log.back().diagnostics, stats.diagnostic);
  }
}

Eigen::MatrixXd history_rows(const ReturnsPanel& train, const ReturnsPanel& validation) {
  if (train.cols() != validation.cols()) throw GroupingMismatch("training and validation panels differ in width");
  Eigen::MatrixXd h(train.returns().rows() + validation.returns().rows(), train.returns().cols());
  h << train.returns(), validation.returns();
  return h;
}

CandidateScore score_on_history(const Grouping& grouping, const Eigen::MatrixXd& history, std::size_t train_len,
                                std::size_t val_len, std::size_t est_window) {
  CandidateScore out;
  try {
    const Eigen::MatrixXd grouped = group_returns(history, grouping);
    const auto realized = rolling_tangency_returns(grouped, train_len, val_len, est_window);
    out.score = sharpe(realized).annualized_sharpe;
  } catch (const Error& e) {
    out.score = -std::numeric_limits<double>::infinity();
    out.diagnostic = e.what();
  }
  return out;
}

}  // namespace

void EngineConfig::validate() const {
  if (perplexity_grid.empty()) throw InvalidConfig("perplexity grid is empty");
  if (group_counts.empty()) throw InvalidConfig("group count list is empty");
  if (std::any_of(group_counts.begin(), group_counts.end(), [](std::size_t g) { return g == 0; })) {
    throw InvalidConfig("group counts must be positive");
  }
  if (clustering_restarts == 0 || reselect_every == 0 || random_bench_reps == 0) {
    throw InvalidConfig("restart, reselection and repetition counts must be positive");
  }
  if (train_len == 0 || est_window < 2) throw InvalidConfig("train_len must be positive and est_window at least 2");
  if (train_len < est_window) throw InvalidConfig("train_len must be at least est_window");
  if (val_len < 2) throw InvalidConfig("val_len must be at least 2 to score candidates");
  if (bootstrap_reps < 2) throw InvalidConfig("bootstrap_reps must be at least 2");
  if (kmeans_restarts < 1) throw InvalidConfig("kmeans_restarts must be positive");
}

std::size_t test_point_count(std::size_t rows, const EngineConfig& config) {
  if (rows <= config.train_len + config.val_len) {
    throw NoTestData(fmt::format("{} rows leave no test point after {} training and {} validation rows", rows,
                                 config.train_len, config.val_len));
  }
  return rows - config.train_len - config.val_len;
}

std::size_t epoch_count(std::size_t rows, const EngineConfig& config) {
  const std::size_t n = test_point_count(rows, config);
  return (n + config.reselect_every - 1) / config.reselect_every;
}

std::vector<Embedding> compute_embeddings(const ReturnsPanel& train, const EngineConfig& config, std::size_t epoch) {
  const Eigen::MatrixXd points = train.returns().transpose();
  std::vector<Embedding> out(config.perplexity_grid.size());
  parallel_for(out.size(), config.jobs, [&](std::size_t i) {
    TsneConfig cfg = config.tsne;
    cfg.perplexity = config.perplexity_grid[i];
    cfg.seed = derive_seed(config.master_seed, SeedRole::kTsne, i, 0, epoch);
    out[i] = run_tsne(points, cfg);
  });
  return out;
}

std::vector<Candidate> enumerate_candidates(const std::vector<Embedding>& embeddings, std::size_t g,
                                            const EngineConfig& config, std::size_t epoch) {
  if (embeddings.empty()) return {};
  const auto n = static_cast<std::size_t>(embeddings.front().points.rows());
  if (g < 1 || g > n) throw InvalidK(fmt::format("cannot form {} groups from {} companies", g, n));

  const std::size_t restarts = config.clustering_restarts;
  std::vector<Candidate> out(embeddings.size() * restarts);
  SpectralOptions opts;
  opts.kmeans_restarts = config.kmeans_restarts;
  parallel_for(out.size(), config.jobs, [&](std::size_t idx) {
    const std::size_t p = idx / restarts;
    const std::size_t r = idx % restarts;
    Candidate& c = out[idx];
    c.perplexity = embeddings[p].config_used.perplexity;
    c.perplexity_index = p;
    c.restart_index = r;
    c.restart_seed = derive_seed(config.master_seed, SeedRole::kCluster, p, r, epoch);
    c.g = g;
    try {
      SpectralResult res = spectral_cluster(embeddings[p].points, g, c.restart_seed, opts);
      c.grouping = std::move(res.grouping);
      if (res.compacted) c.diagnostics = fmt::format("only {} of {} groups non-empty", c.grouping.group_count(), g);
      if (!res.degenerate_rows.empty()) {
        append_diagnostic(c.diagnostics, fmt::format("{} degenerate spectral rows", res.degenerate_rows.size()));
      }
    } catch (const Error& e) {
      c.diagnostics = e.what();
    }
  });
  return out;
}

std::vector<Candidate> enumerate_candidates(const ReturnsPanel& train, std::size_t g, const EngineConfig& config) {
  return enumerate_candidates(compute_embeddings(train, config, 0), g, config, 0);
}

std::vector<double> rolling_tangency_returns(const Eigen::MatrixXd& grouped, std::size_t first, std::size_t count,
                                             std::size_t est_window, bool* ridge_applied) {
  if (first < est_window || first + count > static_cast<std::size_t>(grouped.rows())) {
    throw InsufficientData("not enough history rows for the rolling estimation window");
  }
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t t = first; t < first + count; ++t) {
    const auto window = grouped.middleRows(static_cast<Eigen::Index>(t - est_window), static_cast<Eigen::Index>(est_window));
    const TangencyResult tr = tangency_weights(estimate_moments(window, est_window));
    if (tr.ridge_applied && ridge_applied) *ridge_applied = true;
    out.push_back(grouped.row(static_cast<Eigen::Index>(t)).dot(tr.weights.weights));
  }
  return out;
}

CandidateScore score_candidate(const Candidate& candidate, const ReturnsPanel& train, const ReturnsPanel& validation,
                               std::size_t est_window) {
  if (!candidate.viable()) return CandidateScore{-std::numeric_limits<double>::infinity(), candidate.diagnostics};
  if (candidate.grouping.size() != train.cols()) {
    throw GroupingMismatch("candidate grouping does not cover the panel tickers");
  }
  return score_on_history(candidate.grouping, history_rows(train, validation), train.rows(), validation.rows(),
                          est_window);
}

const Candidate& select_model(std::span<const Candidate> candidates) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!c.viable() || !std::isfinite(c.val_sharpe)) continue;
    if (best == nullptr || c.val_sharpe > best->val_sharpe ||
        (c.val_sharpe == best->val_sharpe &&
         (c.perplexity < best->perplexity ||
          (c.perplexity == best->perplexity && c.restart_seed < best->restart_seed)))) {
      best = &c;
    }
  }
  if (best == nullptr) throw NoViableCandidate("every candidate grouping was degenerate");
  return *best;
}

std::vector<BacktestReport> run_backtest_ts_all(const ReturnsPanel& panel, const EngineConfig& config) {
  config.validate();
  const std::size_t n_test = test_point_count(panel.rows(), config);
  const std::size_t n_epochs = epoch_count(panel.rows(), config);
  for (auto g : config.group_counts) {
    if (g > panel.cols()) throw InvalidK(fmt::format("cannot form {} groups from {} companies", g, panel.cols()));
  }

  const std::size_t n_g = config.group_counts.size();
  std::vector<std::vector<Grouping>> chosen(n_g, std::vector<Grouping>(n_epochs));
  std::vector<std::vector<EpochRecord>> records(n_g, std::vector<EpochRecord>(n_epochs));

  for (std::size_t e = 0; e < n_epochs; ++e) {
    const std::size_t start = e * config.reselect_every;
    const std::size_t end = std::min(start + config.reselect_every, n_test);
    const ReturnsPanel train = panel.slice({start, start + config.train_len});
    const ReturnsPanel validation = panel.slice({start + config.train_len, start + config.train_len + config.val_len});
    const Eigen::MatrixXd history = history_rows(train, validation);

    progress(config, fmt::format("epoch {}/{}: fitting {} t-SNE maps", e + 1, n_epochs, config.perplexity_grid.size()));
    const std::vector<Embedding> embeddings = compute_embeddings(train, config, e);
    std::string embed_diag;
    for (const auto& emb : embeddings) {
      if (!emb.unconverged_rows.empty()) {
        append_diagnostic(embed_diag, fmt::format("perplexity {}: {} bandwidth rows unconverged",
                                                  emb.config_used.perplexity, emb.unconverged_rows.size()));
      }
    }

    for (std::size_t gi = 0; gi < n_g; ++gi) {
      const std::size_t g = config.group_counts[gi];
      std::vector<Candidate> candidates = enumerate_candidates(embeddings, g, config, e);
      parallel_for(candidates.size(), config.jobs, [&](std::size_t i) {
        Candidate& c = candidates[i];
        if (!c.viable()) return;
        CandidateScore s = score_on_history(c.grouping, history, config.train_len, config.val_len, config.est_window);
        c.val_sharpe = s.score;
        append_diagnostic(c.diagnostics, s.diagnostic);
      });

      EpochRecord rec;
      try {
        const Candidate& best = select_model(candidates);
        chosen[gi][e] = best.grouping;
        rec = epoch_record(start, end, best.grouping);
        rec.perplexity = best.perplexity;
        rec.seed = best.restart_seed;
        rec.val_sharpe = best.val_sharpe;
        rec.diagnostics = best.diagnostics;
      } catch (const NoViableCandidate& err) {
        progress(config, fmt::format("warning: epoch {} g={}: {}; using the naive portfolio", e + 1, g, err.what()));
        chosen[gi][e] = Grouping::single_group(panel.cols());
        rec = epoch_record(start, end, chosen[gi][e]);
        rec.diagnostics = fmt::format("no viable candidate, fell back to g=1 naive ({})", err.what());
      }
      append_diagnostic(rec.diagnostics, embed_diag);
      records[gi][e] = std::move(rec);
      progress(config, fmt::format("epoch {}/{}: g={} selected {} groups", e + 1, n_epochs, g, records[gi][e].g));
    }
  }

  std::vector<BacktestReport> out;
  out.reserve(n_g);
  for (std::size_t gi = 0; gi < n_g; ++gi) {
    const std::size_t g = config.group_counts[gi];
    BacktestReport rep = backtest_groupings_raw(panel, chosen[gi], config, fmt::format("TS_{}", g), g);
    for (std::size_t e = 0; e < n_epochs; ++e) {
      std::string ridge_diag = std::move(rep.epoch_log[e].diagnostics);
      rep.epoch_log[e] = std::move(records[gi][e]);
      append_diagnostic(rep.epoch_log[e].diagnostics, ridge_diag);
    }
    finalize(rep, config);
    out.push_back(std::move(rep));
  }
  return out;
}

BacktestReport run_backtest_ts(const ReturnsPanel& panel, std::size_t g, const EngineConfig& config) {
  EngineConfig single = config;
  single.group_counts = {g};
  return std::move(run_backtest_ts_all(panel, single).front());
}

BacktestReport run_backtest_with_groupings(const ReturnsPanel& panel, std::span<const Grouping> epoch_groupings,
                                           const EngineConfig& config, std::string name, std::size_t g_label) {
  BacktestReport rep = backtest_groupings_raw(panel, epoch_groupings, config, std::move(name), g_label);
  finalize(rep, config);
  return rep;
}

BacktestReport run_benchmark_mw(const ReturnsPanel& panel, const EngineConfig& config) {
  const std::vector<Grouping> groupings(epoch_count(panel.rows(), config), Grouping::singletons(panel.cols()));
  return run_backtest_with_groupings(panel, groupings, config, "MW_full", 1);
}

BacktestReport run_benchmark_naive(const ReturnsPanel& panel, const EngineConfig& config) {
  // A single group is the 1/n portfolio; its tangency weight is pinned to one.
  const std::vector<Grouping> groupings(epoch_count(panel.rows(), config), Grouping::single_group(panel.cols()));
  return run_backtest_with_groupings(panel, groupings, config, "N_full", 1);
}

Grouping industry_grouping(const std::vector<std::string>& tickers, const std::vector<CompanyMeta>& meta,
                           std::size_t digits) {
  if (digits == 0) throw InvalidConfig("industry prefix length must be positive");
  std::unordered_map<std::string, const CompanyMeta*> by_ticker;
  for (const auto& m : meta) by_ticker.emplace(m.ticker, &m);
  std::map<std::string, std::size_t> prefix_label;
  std::vector<std::size_t> labels;
  labels.reserve(tickers.size());
  for (const auto& tk : tickers) {
    auto it = by_ticker.find(tk);
    if (it == by_ticker.end()) throw MetadataMissing(tk);
    const std::string prefix = it->second->industry_code.substr(0, digits);
    labels.push_back(prefix_label.try_emplace(prefix, prefix_label.size()).first->second);
  }
  return Grouping::from_labels(labels);
}

BacktestReport run_benchmark_industry(const ReturnsPanel& panel, const std::vector<CompanyMeta>& meta,
                                      std::size_t digits, const EngineConfig& config) {
  const Grouping grouping = industry_grouping(panel.tickers(), meta, digits);
  const std::vector<Grouping> groupings(epoch_count(panel.rows(), config), grouping);
  return run_backtest_with_groupings(panel, groupings, config, fmt::format("TR{}", digits), grouping.group_count());
}

Grouping random_grouping(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> labels(n);
  std::size_t pos = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    for (std::size_t k = 0; k < sizes[g]; ++k) labels[perm[pos++]] = g;
  }
  return Grouping::from_labels(labels);
}

std::vector<std::vector<std::size_t>> epoch_group_sizes(const BacktestReport& report) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(report.epoch_log.size());
  for (const auto& rec : report.epoch_log) out.push_back(rec.group_sizes);
  return out;
}

RandomBenchmarkReport run_benchmark_random(const ReturnsPanel& panel, std::size_t g, const EngineConfig& config,
                                           const std::vector<std::vector<std::size_t>>& reference_sizes) {
  config.validate();
  const std::size_t n_epochs = epoch_count(panel.rows(), config);
  if (reference_sizes.size() != n_epochs) {
    throw SizeMismatch(fmt::format("{} size vectors supplied for {} epochs", reference_sizes.size(), n_epochs));
  }
  for (const auto& sizes : reference_sizes) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total != panel.cols() || std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) {
      throw SizeMismatch(fmt::format("group sizes sum to {} but the panel has {} companies", total, panel.cols()));
    }
  }

  const std::string name = fmt::format("RND_{}", g);
  const std::size_t reps = config.random_bench_reps;
  std::vector<BacktestReport> runs(reps);
  std::vector<SharpeWithSe> stats(reps);
  parallel_for(reps, config.jobs, [&](std::size_t r) {
    std::vector<Grouping> groupings;
    groupings.reserve(n_epochs);
    for (std::size_t e = 0; e < n_epochs; ++e) {
      groupings.push_back(random_grouping(reference_sizes[e], derive_seed(config.master_seed, SeedRole::kRandomGrouping, g, r, e)));
    }
    runs[r] = backtest_groupings_raw(panel, groupings, config, name, g);
    stats[r] = summarize_returns(runs[r].test_returns, config.bootstrap_reps, bootstrap_seed(config, name, r + 1));
  });

  RandomBenchmarkReport out;
  out.averaged = runs.front();
  const std::size_t n_test = out.averaged.test_returns.size();
  for (std::size_t t = 0; t < n_test; ++t) {
    double s = 0.0;
    for (const auto& run : runs) s += run.test_returns[t];
    out.averaged.test_returns[t] = s / static_cast<double>(reps);
  }
  out.averaged.sharpe.reset();

  double se_sum = 0.0;
  std::size_t se_count = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    if (!stats[r].sharpe) throw ZeroVariance(fmt::format("{} repetition {}: {}", name, r, stats[r].diagnostic));
    out.rep_sharpes.push_back(stats[r].sharpe->annualized_sharpe);
    if (stats[r].sharpe->bootstrap_se) {
      out.rep_bootstrap_se.push_back(*stats[r].sharpe->bootstrap_se);
      se_sum += *stats[r].sharpe->bootstrap_se;
      ++se_count;
    }
  }
  out.mean_sharpe = std::accumulate(out.rep_sharpes.begin(), out.rep_sharpes.end(), 0.0) / static_cast<double>(reps);
  if (se_count == reps) out.mean_bootstrap_se = se_sum / static_cast<double>(reps);
  for (auto& rec : out.averaged.epoch_log) append_diagnostic(rec.diagnostics, "labels from repetition 0");
  return out;
}

}  // namespace clustfolio
