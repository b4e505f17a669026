#pragma once

#include <clustfolio/engine.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace clustfolio::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Everything a `backtest` run needs.
struct RunConfig {
  EngineConfig engine;
  std::filesystem::path prices;
  std::filesystem::path meta;
  std::filesystem::path out = ".";
  std::vector<std::string> strategies;
};

/// Strategy tokens accepted by `--strategies`.
const std::vector<std::string>& known_strategies();

/// Runs every requested strategy and writes the summary, per-strategy
/// returns and epoch logs, and the Sharpe-vs-g chart into `config.out`.
/// Files already written are removed if a later step fails.
void run_backtest_command(const RunConfig& config, std::ostream& log);

/// Parses `argv` and runs one subcommand. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clustfolio::cli
