#include "clustfolio/cli/cli.hpp"

#include "clustfolio/cli/svg.hpp"

#include <clustfolio/data.hpp>
#include <clustfolio/errors.hpp>
#include <clustfolio/report.hpp>
#include <clustfolio/spectral.hpp>
#include <clustfolio/tsne.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <thread>
#include <unordered_map>

namespace clustfolio::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config files hold unqualified `key = value` lines; attach them to the
// subcommand being run so they fill that subcommand's options.
class FlatConfig : public CLI::ConfigTOML {
 public:
  explicit FlatConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents = {subs.front()->get_name()};
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

// Output files of one command; removed unless commit() is reached.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory " + dir_.string());
  }
  ~Outputs() {
    if (committed_) return;
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;

  fs::path claim(const std::string& name) {
    written_.push_back(dir_ / name);
    return written_.back();
  }

  void text(const std::string& name, const std::string& body) {
    const fs::path p = claim(name);
    std::ofstream o(p, std::ios::binary);
    o << body;
    o.close();
    if (!o) throw IoError("failed writing " + p.string());
  }

  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

struct Coloring {
  std::vector<std::size_t> classes;
  std::vector<std::string> names;
};

Coloring color_from_grouping_file(const fs::path& path, const std::vector<std::string>& tickers) {
  const GroupingFile gf = read_grouping_csv(path);
  std::unordered_map<std::string, std::size_t> by_ticker;
  for (std::size_t i = 0; i < gf.tickers.size(); ++i) by_ticker.emplace(gf.tickers[i], gf.labels[i]);
  std::vector<std::size_t> raw;
  for (const auto& t : tickers) {
    auto it = by_ticker.find(t);
    if (it == by_ticker.end()) throw GroupingMismatch(fmt::format("{} has no label in {}", t, path.string()));
    raw.push_back(it->second);
  }
  Coloring c;
  c.classes = Grouping::from_labels(raw).labels();
  c.names.resize(Grouping::from_labels(raw).group_count());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (c.names[c.classes[i]].empty()) c.names[c.classes[i]] = fmt::format("group {}", raw[i]);
  }
  return c;
}

Coloring color_from_industry(const fs::path& meta_path, std::size_t digits, const std::vector<std::string>& tickers) {
  const auto meta = load_meta_csv(meta_path);
  const Grouping g = industry_grouping(tickers, meta, digits);
  std::unordered_map<std::string, std::string> code;
  for (const auto& m : meta) code.emplace(m.ticker, m.industry_code);
  Coloring c;
  c.classes = g.labels();
  c.names.resize(g.group_count());
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (c.names[c.classes[i]].empty()) c.names[c.classes[i]] = code.at(tickers[i]).substr(0, digits);
  }
  return c;
}

Coloring color_from_grouping(const Grouping& g) {
  Coloring c;
  c.classes = g.labels();
  for (std::size_t k = 0; k < g.group_count(); ++k) c.names.push_back(fmt::format("group {}", k));
  return c;
}

ScatterSpec scatter_of(std::string title, const Eigen::MatrixXd& points, const Coloring& colors) {
  ScatterSpec spec;
  spec.title = std::move(title);
  spec.points = points;
  spec.classes = colors.classes;
  spec.class_names = colors.names;
  return spec;
}

ReturnsPanel load_returns(const fs::path& prices) { return compute_discrete_returns(load_price_csv(prices)); }

// ---------------------------------------------------------------- embed

struct EmbedArgs {
  fs::path prices;
  fs::path out = ".";
  std::vector<double> perplexities;
  std::uint64_t seed = 0;
  TsneConfig tsne;
  fs::path color_by;
  fs::path meta;
  std::size_t industry_digits = 0;
};

void cmd_embed(const EmbedArgs& a, std::ostream& log) {
  if (a.perplexities.empty()) throw UsageError("--perplexity needs at least one value");
  if (a.industry_digits > 0 && a.meta.empty()) throw UsageError("--industry-digits needs --meta");
  const ReturnsPanel returns = load_returns(a.prices);
  const auto& tickers = returns.tickers();
  Coloring colors;
  if (!a.color_by.empty()) {
    colors = color_from_grouping_file(a.color_by, tickers);
  } else if (a.industry_digits > 0) {
    colors = color_from_industry(a.meta, a.industry_digits, tickers);
  }

  Outputs out(a.out);
  const Eigen::MatrixXd points = returns.returns().transpose();
  for (double p : a.perplexities) {
    TsneConfig cfg = a.tsne;
    cfg.perplexity = p;
    cfg.seed = a.seed;
    log << fmt::format("embed: {} companies, perplexity {}\n", tickers.size(), format_double(p));
    const Embedding e = run_tsne(points, cfg);
    if (!e.unconverged_rows.empty()) {
      log << fmt::format("embed: {} bandwidth rows did not reach the perplexity tolerance\n", e.unconverged_rows.size());
    }
    const std::string stem = "embedding_p" + format_double(p);
    write_embedding_csv(tickers, e.points, out.claim(stem + ".csv"));
    write_embedding_sidecar(e, out.claim(stem + ".txt"));
    out.text(stem + ".svg", scatter_svg(scatter_of(fmt::format("t-SNE, perplexity {}", format_double(p)), e.points,
                                                   colors)));
  }
  out.commit();
}

// -------------------------------------------------------------- cluster

struct ClusterArgs {
  fs::path embedding;
  fs::path prices;
  fs::path out = ".";
  std::vector<double> perplexities;
  std::vector<std::size_t> groups;
  std::uint64_t seed = 0;
  std::optional<double> scale;
  int kmeans_restarts = 10;
  TsneConfig tsne;
};

void cmd_cluster(const ClusterArgs& a, std::ostream& log) {
  if (a.groups.empty()) throw UsageError("--groups needs at least one value");
  std::vector<std::string> tickers;
  Eigen::MatrixXd points;
  if (!a.embedding.empty()) {
    EmbeddingFile ef = read_embedding_csv(a.embedding);
    tickers = std::move(ef.tickers);
    points = std::move(ef.points);
  } else if (!a.prices.empty()) {
    if (a.perplexities.size() != 1) throw UsageError("clustering from prices needs exactly one --perplexity");
    const ReturnsPanel returns = load_returns(a.prices);
    TsneConfig cfg = a.tsne;
    cfg.perplexity = a.perplexities.front();
    cfg.seed = a.seed;
    log << fmt::format("cluster: fitting t-SNE with perplexity {}\n", format_double(cfg.perplexity));
    tickers = returns.tickers();
    points = run_tsne(returns.returns().transpose(), cfg).points;
  } else {
    throw UsageError("cluster needs --embedding or --prices");
  }

  SpectralOptions opts;
  opts.scale = a.scale;
  opts.kmeans_restarts = a.kmeans_restarts;
  Outputs out(a.out);
  for (std::size_t k : a.groups) {
    const SpectralResult r = spectral_cluster(points, k, a.seed, opts);
    log << fmt::format("cluster: k={} gave {} groups (kernel scale {})\n", k, r.grouping.group_count(),
                       format_double(r.scale));
    if (r.compacted) log << fmt::format("cluster: k={} left empty groups; labels were compacted\n", k);
    const std::string stem = fmt::format("grouping_k{}", k);
    write_grouping_csv(tickers, r.grouping, out.claim(stem + ".csv"));
    write_spectral_diagnostics(r, out.claim(stem + ".txt"));
    out.text(stem + ".svg", scatter_svg(scatter_of(fmt::format("Spectral clustering, {} groups", k), points,
                                                   color_from_grouping(r.grouping))));
  }
  out.commit();
}

// ------------------------------------------------------------- backtest

void write_strategy_files(Outputs& out, const BacktestReport& report) {
  write_returns_csv(report, out.claim("returns_" + report.strategy_name + ".csv"));
  write_epoch_log_jsonl(report, out.claim("epochs_" + report.strategy_name + ".jsonl"));
}

bool wants(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

// --------------------------------------------------------------- report

struct ReportArgs {
  fs::path summary;
  fs::path embedding;
  fs::path grouping;
  fs::path out = ".";
};

void cmd_report(const ReportArgs& a, std::ostream& log) {
  if (a.grouping.empty() != a.embedding.empty() && !a.grouping.empty()) {
    throw UsageError("--grouping needs --embedding");
  }
  if (a.summary.empty() && a.embedding.empty()) throw UsageError("report needs --summary or --embedding");
  Outputs out(a.out);
  if (!a.summary.empty()) {
    const auto rows = read_summary_csv(a.summary);
    log << fmt::format("report: {} summary rows\n", rows.size());
    out.text("sharpe_vs_g.svg", sharpe_chart_svg(rows));
  }
  if (!a.embedding.empty()) {
    const EmbeddingFile ef = read_embedding_csv(a.embedding);
    Coloring colors;
    if (!a.grouping.empty()) colors = color_from_grouping_file(a.grouping, ef.tickers);
    out.text(a.embedding.stem().string() + ".svg", scatter_svg(scatter_of(a.embedding.stem().string(), ef.points, colors)));
  }
  out.commit();
}

void add_tsne_options(CLI::App* sub, TsneConfig& t) {
  sub->add_option("--max-iter", t.max_iter, "t-SNE iterations")->capture_default_str();
  sub->add_option("--learning-rate", t.learning_rate, "t-SNE step size")->capture_default_str();
  sub->add_option("--momentum-initial", t.momentum_initial)->capture_default_str();
  sub->add_option("--momentum-final", t.momentum_final)->capture_default_str();
  sub->add_option("--momentum-switch-iter", t.momentum_switch_iter)->capture_default_str();
  sub->add_option("--exaggeration", t.early_exaggeration_factor, "early exaggeration factor")->capture_default_str();
  sub->add_option("--exaggeration-iters", t.early_exaggeration_iters)->capture_default_str();
  sub->add_option("--bandwidth-tolerance", t.bandwidth_tolerance)->capture_default_str();
  sub->add_option("--bandwidth-max-iters", t.bandwidth_max_iters)->capture_default_str();
  sub->add_option("--out-dim", t.out_dim, "embedding dimension (2 or 3)")->capture_default_str();
  sub->add_flag("--standardize", t.standardize, "z-score each company's returns before t-SNE");
}

}  // namespace

const std::vector<std::string>& known_strategies() {
  static const std::vector<std::string> names = {"TS", "RND", "MW_full", "N_full", "TR2", "TR4"};
  return names;
}

void run_backtest_command(const RunConfig& config, std::ostream& log) {
  std::vector<std::string> strategies = config.strategies.empty() ? known_strategies() : config.strategies;
  for (const auto& s : strategies) {
    if (!wants(known_strategies(), s)) throw UsageError(fmt::format("unknown strategy '{}'", s));
  }
  if (config.meta.empty() && (wants(strategies, "TR2") || wants(strategies, "TR4"))) {
    if (!config.strategies.empty()) throw UsageError("TR2/TR4 need --meta");
    log << "backtest: no --meta given, skipping TR2 and TR4\n";
    std::erase_if(strategies, [](const std::string& s) { return s == "TR2" || s == "TR4"; });
  }
  EngineConfig engine = config.engine;
  engine.validate();
  engine.on_progress = [&log](const std::string& m) { log << "backtest: " << m << '\n'; };

  const ReturnsPanel panel = load_returns(config.prices);
  std::vector<CompanyMeta> meta;
  if (!config.meta.empty()) meta = load_meta_csv(config.meta);
  log << fmt::format("backtest: {} companies, {} return rows, {} test points\n", panel.cols(), panel.rows(),
                     test_point_count(panel.rows(), engine));

  Outputs out(config.out);
  std::vector<SummaryRow> ts_rows;
  std::vector<SummaryRow> rnd_rows;
  std::vector<SummaryRow> bench_rows;

  if (wants(strategies, "TS") || wants(strategies, "RND")) {
    const std::vector<BacktestReport> ts = run_backtest_ts_all(panel, engine);
    for (std::size_t gi = 0; gi < ts.size(); ++gi) {
      if (wants(strategies, "TS")) {
        write_strategy_files(out, ts[gi]);
        ts_rows.push_back(summary_row(ts[gi]));
      }
      if (wants(strategies, "RND")) {
        const std::size_t g = engine.group_counts[gi];
        log << fmt::format("backtest: RND_{} with {} repetitions\n", g, engine.random_bench_reps);
        const RandomBenchmarkReport rnd = run_benchmark_random(panel, g, engine, epoch_group_sizes(ts[gi]));
        write_strategy_files(out, rnd.averaged);
        std::string reps = "rep,sharpe_annualized,bootstrap_se\n";
        for (std::size_t r = 0; r < rnd.rep_sharpes.size(); ++r) {
          const std::string se = r < rnd.rep_bootstrap_se.size() ? format_double(rnd.rep_bootstrap_se[r]) : "";
          reps += fmt::format("{},{},{}\n", r, format_double(rnd.rep_sharpes[r]), se);
        }
        out.text("reps_" + rnd.averaged.strategy_name + ".csv", reps);
        rnd_rows.push_back(summary_row(rnd));
      }
    }
  }
  auto bench = [&](const BacktestReport& r) {
    write_strategy_files(out, r);
    bench_rows.push_back(summary_row(r));
  };
  if (wants(strategies, "MW_full")) bench(run_benchmark_mw(panel, engine));
  if (wants(strategies, "N_full")) bench(run_benchmark_naive(panel, engine));
  if (wants(strategies, "TR2")) bench(run_benchmark_industry(panel, meta, 2, engine));
  if (wants(strategies, "TR4")) bench(run_benchmark_industry(panel, meta, 4, engine));

  std::vector<SummaryRow> rows = ts_rows;
  rows.insert(rows.end(), rnd_rows.begin(), rnd_rows.end());
  rows.insert(rows.end(), bench_rows.begin(), bench_rows.end());
  write_summary_csv(rows, out.claim("summary.csv"));
  out.text("sharpe_vs_g.svg", sharpe_chart_svg(rows));
  out.commit();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"t-SNE grouping and tangency portfolio decision engine", "clustfolio"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat `key = value` file; command-line flags take precedence");
  app.config_formatter(std::make_shared<FlatConfig>(&app));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());

  EmbedArgs embed;
  auto* e = app.add_subcommand("embed", "fit t-SNE maps of the companies");
  e->add_option("--prices", embed.prices, "price CSV (date column, one column per ticker)")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--out", embed.out, "output directory")->capture_default_str();
  e->add_option("--perplexity", embed.perplexities, "one or more perplexities")->required()->expected(1, -1);
  e->add_option("--seed", embed.seed, "random seed")->envname("CLUSTFOLIO_SEED")->capture_default_str();
  e->add_option("--color-by", embed.color_by, "grouping CSV used to color the points")->check(CLI::ExistingFile);
  e->add_option("--meta", embed.meta, "metadata CSV (ticker,industry_code)")->check(CLI::ExistingFile);
  e->add_option("--industry-digits", embed.industry_digits, "color by this many leading industry-code digits");
  add_tsne_options(e, embed.tsne);

  ClusterArgs cluster;
  auto* c = app.add_subcommand("cluster", "spectral clustering of an embedding");
  c->add_option("--embedding", cluster.embedding, "embedding CSV from `embed`")->check(CLI::ExistingFile);
  c->add_option("--prices", cluster.prices, "price CSV; fits the embedding on the fly")->check(CLI::ExistingFile);
  c->add_option("--perplexity", cluster.perplexities, "perplexity when fitting from prices")->expected(1, -1);
  c->add_option("--groups", cluster.groups, "one or more group counts")->required()->expected(1, -1);
  c->add_option("--seed", cluster.seed, "random seed")->envname("CLUSTFOLIO_SEED")->capture_default_str();
  c->add_option("--scale", cluster.scale, "Gaussian kernel width (default: median heuristic)");
  c->add_option("--kmeans-restarts", cluster.kmeans_restarts)->capture_default_str();
  c->add_option("--out", cluster.out, "output directory")->capture_default_str();
  add_tsne_options(c, cluster.tsne);

  RunConfig bt;
  bt.engine.jobs = hw;
  auto* b = app.add_subcommand("backtest", "run the decision engine and the benchmarks");
  b->add_option("--prices", bt.prices, "price CSV")->required()->check(CLI::ExistingFile);
  b->add_option("--meta", bt.meta, "metadata CSV, needed by TR2/TR4")->check(CLI::ExistingFile);
  b->add_option("--out", bt.out, "output directory")->capture_default_str();
  b->add_option("--perplexity", bt.engine.perplexity_grid, "perplexity grid")->expected(1, -1)->capture_default_str();
  b->add_option("--groups", bt.engine.group_counts, "group counts g")->expected(1, -1)->capture_default_str();
  b->add_option("--restarts", bt.engine.clustering_restarts, "clusterings per map")->capture_default_str();
  b->add_option("--train-len", bt.engine.train_len)->capture_default_str();
  b->add_option("--val-len", bt.engine.val_len)->capture_default_str();
  b->add_option("--est-window", bt.engine.est_window)->capture_default_str();
  b->add_option("--reselect-every", bt.engine.reselect_every)->capture_default_str();
  b->add_option("--random-reps", bt.engine.random_bench_reps)->capture_default_str();
  b->add_option("--bootstrap-reps", bt.engine.bootstrap_reps)->capture_default_str();
  b->add_option("--kmeans-restarts", bt.engine.kmeans_restarts)->capture_default_str();
  b->add_option("--seed", bt.engine.master_seed, "master seed")->envname("CLUSTFOLIO_SEED")->capture_default_str();
  b->add_option("--jobs", bt.engine.jobs, "concurrent tasks")->check(CLI::PositiveNumber);
  b->add_option("--strategies", bt.strategies, "subset of TS RND MW_full N_full TR2 TR4")->expected(1, -1);
  add_tsne_options(b, bt.engine.tsne);

  ReportArgs report;
  auto* r = app.add_subcommand("report", "re-render charts from earlier outputs");
  r->add_option("--summary", report.summary, "summary CSV from `backtest`")->check(CLI::ExistingFile);
  r->add_option("--embedding", report.embedding, "embedding CSV to plot")->check(CLI::ExistingFile);
  r->add_option("--grouping", report.grouping, "grouping CSV used for colors")->check(CLI::ExistingFile);
  r->add_option("--out", report.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  }

  try {
    if (e->parsed()) cmd_embed(embed, err);
    if (c->parsed()) cmd_cluster(cluster, err);
    if (b->parsed()) run_backtest_command(bt, err);
    if (r->parsed()) cmd_report(report, err);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const InvalidConfig& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace clustfolio::cli
