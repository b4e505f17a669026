#pragma once

#include "clustfolio/engine.hpp"
#include "clustfolio/spectral.hpp"
#include "clustfolio/tsne.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clustfolio {

/// One line of the summary table.
struct SummaryRow {
  std::string strategy;
  std::size_t g = 0;
  std::optional<double> sharpe_annualized;
  std::optional<double> bootstrap_se;
  std::size_t n_obs = 0;

  bool operator==(const SummaryRow&) const = default;
};

SummaryRow summary_row(const BacktestReport& report);
/// Uses the mean Sharpe ratio and mean bootstrap SE across repetitions.
SummaryRow summary_row(const RandomBenchmarkReport& report);

/// `strategy,g,sharpe_annualized,bootstrap_se,n_obs`; missing values are empty.
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

/// `date,test_return`
void write_returns_csv(const BacktestReport& report, const std::filesystem::path& path);

/// One JSON object per epoch.
void write_epoch_log_jsonl(const BacktestReport& report, const std::filesystem::path& path);

/// `ticker,y1,y2[,y3]`
void write_embedding_csv(const std::vector<std::string>& tickers, const Eigen::MatrixXd& points,
                         const std::filesystem::path& path);

struct EmbeddingFile {
  std::vector<std::string> tickers;
  Eigen::MatrixXd points;
};
EmbeddingFile read_embedding_csv(const std::filesystem::path& path);

/// `key = value` lines with the configuration used and the final cost.
void write_embedding_sidecar(const Embedding& embedding, const std::filesystem::path& path);

/// `ticker,group_label`
void write_grouping_csv(const std::vector<std::string>& tickers, const Grouping& grouping,
                        const std::filesystem::path& path);

struct GroupingFile {
  std::vector<std::string> tickers;
  std::vector<std::size_t> labels;
};
GroupingFile read_grouping_csv(const std::filesystem::path& path);

/// Eigenvalues, kernel scale and degenerate-row flags of one clustering.
void write_spectral_diagnostics(const SpectralResult& result, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace clustfolio
