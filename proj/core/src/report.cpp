#include "clustfolio/report.hpp"

#include "clustfolio/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace clustfolio {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(fmt::format("{}: cannot parse '{}' as a number", path.string(), s));
  }
  return v;
}

std::size_t parse_count(const std::string& s, const std::filesystem::path& path) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError(fmt::format("{}: cannot parse '{}' as a count", path.string(), s));
  }
  return v;
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string format_double(double value) { return fmt::format("{}", value); }

SummaryRow summary_row(const BacktestReport& report) {
  SummaryRow row;
  row.strategy = report.strategy_name;
  row.g = report.g;
  row.n_obs = report.test_returns.size();
  if (report.sharpe) {
    row.sharpe_annualized = report.sharpe->annualized_sharpe;
    row.bootstrap_se = report.sharpe->bootstrap_se;
  }
  return row;
}

SummaryRow summary_row(const RandomBenchmarkReport& report) {
  SummaryRow row;
  row.strategy = report.averaged.strategy_name;
  row.g = report.averaged.g;
  row.n_obs = report.averaged.test_returns.size();
  row.sharpe_annualized = report.mean_sharpe;
  row.bootstrap_se = report.mean_bootstrap_se;
  return row;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "strategy,g,sharpe_annualized,bootstrap_se,n_obs\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{}\n", r.strategy, r.g, optional_field(r.sharpe_annualized),
                       optional_field(r.bootstrap_se), r.n_obs);
  }
  close_checked(out, path);
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_line(line) != std::vector<std::string>{"strategy", "g", "sharpe_annualized",
                                                                              "bootstrap_se", "n_obs"}) {
    throw ParseError(path.string() + ": unexpected summary header");
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    if (f.size() != 5) throw ParseError(path.string() + ": malformed summary row");
    SummaryRow r;
    r.strategy = f[0];
    r.g = parse_count(f[1], path);
    if (!f[2].empty()) r.sharpe_annualized = parse_double(f[2], path);
    if (!f[3].empty()) r.bootstrap_se = parse_double(f[3], path);
    r.n_obs = parse_count(f[4], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_returns_csv(const BacktestReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "date,test_return\n";
  for (std::size_t t = 0; t < report.test_returns.size(); ++t) {
    const std::string date = t < report.test_dates.size() ? report.test_dates[t].to_string() : std::to_string(t);
    out << date << ',' << format_double(report.test_returns[t]) << '\n';
  }
  close_checked(out, path);
}

void write_epoch_log_jsonl(const BacktestReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& rec : report.epoch_log) {
    nlohmann::ordered_json j;
    j["strategy"] = report.strategy_name;
    j["epoch_start"] = rec.start;
    j["epoch_end"] = rec.end;
    j["perplexity"] = rec.perplexity ? nlohmann::ordered_json(*rec.perplexity) : nlohmann::ordered_json(nullptr);
    j["seed"] = rec.seed ? nlohmann::ordered_json(*rec.seed) : nlohmann::ordered_json(nullptr);
    j["g"] = rec.g;
    j["group_sizes"] = rec.group_sizes;
    j["val_sharpe"] = rec.val_sharpe ? nlohmann::ordered_json(*rec.val_sharpe) : nlohmann::ordered_json(nullptr);
    j["labels"] = rec.labels;
    j["diagnostics"] = rec.diagnostics;
    out << j.dump() << '\n';
  }
  close_checked(out, path);
}

void write_embedding_csv(const std::vector<std::string>& tickers, const Eigen::MatrixXd& points,
                         const std::filesystem::path& path) {
  if (static_cast<std::size_t>(points.rows()) != tickers.size()) {
    throw InvalidInput("embedding rows do not match the ticker list");
  }
  auto out = open_out(path);
  out << "ticker";
  for (Eigen::Index d = 0; d < points.cols(); ++d) out << ",y" << (d + 1);
  out << '\n';
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    out << tickers[i];
    for (Eigen::Index d = 0; d < points.cols(); ++d) {
      out << ',' << format_double(points(static_cast<Eigen::Index>(i), d));
    }
    out << '\n';
  }
  close_checked(out, path);
}

EmbeddingFile read_embedding_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty embedding file");
  const auto header = split_line(line);
  if (header.size() < 3 || header.size() > 4 || header[0] != "ticker") {
    throw ParseError(path.string() + ": embedding header must be ticker,y1,y2[,y3]");
  }
  const std::size_t dims = header.size() - 1;
  std::vector<std::string> tickers;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    if (f.size() != dims + 1) throw ParseError(path.string() + ": malformed embedding row");
    tickers.push_back(f[0]);
    std::vector<double> r;
    for (std::size_t d = 0; d < dims; ++d) r.push_back(parse_double(f[d + 1], path));
    rows.push_back(std::move(r));
  }
  EmbeddingFile ef;
  ef.tickers = std::move(tickers);
  ef.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dims));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t d = 0; d < dims; ++d) ef.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
  }
  return ef;
}

void write_embedding_sidecar(const Embedding& embedding, const std::filesystem::path& path) {
  const TsneConfig& c = embedding.config_used;
  auto out = open_out(path);
  out << "perplexity = " << format_double(c.perplexity) << '\n'
      << "out_dim = " << c.out_dim << '\n'
      << "max_iter = " << c.max_iter << '\n'
      << "learning_rate = " << format_double(c.learning_rate) << '\n'
      << "momentum_initial = " << format_double(c.momentum_initial) << '\n'
      << "momentum_final = " << format_double(c.momentum_final) << '\n'
      << "momentum_switch_iter = " << c.momentum_switch_iter << '\n'
      << "early_exaggeration_factor = " << format_double(c.early_exaggeration_factor) << '\n'
      << "early_exaggeration_iters = " << c.early_exaggeration_iters << '\n'
      << "seed = " << c.seed << '\n'
      << "bandwidth_tolerance = " << format_double(c.bandwidth_tolerance) << '\n'
      << "bandwidth_max_iters = " << c.bandwidth_max_iters << '\n'
      << "standardize = " << (c.standardize ? "true" : "false") << '\n'
      << "final_cost = " << format_double(embedding.final_cost) << '\n'
      << "unconverged_bandwidth_rows = " << embedding.unconverged_rows.size() << '\n';
  close_checked(out, path);
}

void write_grouping_csv(const std::vector<std::string>& tickers, const Grouping& grouping,
                        const std::filesystem::path& path) {
  if (grouping.size() != tickers.size()) throw GroupingMismatch("grouping does not match the ticker list");
  auto out = open_out(path);
  out << "ticker,group_label\n";
  for (std::size_t i = 0; i < tickers.size(); ++i) out << tickers[i] << ',' << grouping.labels()[i] << '\n';
  close_checked(out, path);
}

GroupingFile read_grouping_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_line(line) != std::vector<std::string>{"ticker", "group_label"}) {
    throw ParseError(path.string() + ": grouping header must be ticker,group_label");
  }
  GroupingFile gf;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_line(line);
    if (f.size() != 2) throw ParseError(path.string() + ": malformed grouping row");
    gf.tickers.push_back(f[0]);
    gf.labels.push_back(parse_count(f[1], path));
  }
  return gf;
}

void write_spectral_diagnostics(const SpectralResult& result, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "requested_k = " << result.requested_k << '\n'
      << "groups = " << result.grouping.group_count() << '\n'
      << "kernel_scale = " << format_double(result.scale) << '\n'
      << "compacted = " << (result.compacted ? "true" : "false") << '\n'
      << "eigenvalues =";
  for (Eigen::Index i = 0; i < result.eigenvalues.size(); ++i) out << ' ' << format_double(result.eigenvalues[i]);
  out << "\ndegenerate_rows =";
  for (auto r : result.degenerate_rows) out << ' ' << r;
  out << '\n';
  close_checked(out, path);
}

}  // namespace clustfolio
