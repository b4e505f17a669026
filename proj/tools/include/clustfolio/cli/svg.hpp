#pragma once

#include <clustfolio/report.hpp>

#include <Eigen/Dense>

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace clustfolio::cli {

/// Fixed 20-color cycle used by every plot.
const std::array<std::string_view, 20>& palette();

struct ScatterSpec {
  std::string title;
  Eigen::MatrixXd points;            ///< n x 2 (extra columns are ignored)
  std::vector<std::size_t> classes;  ///< empty: single color
  std::vector<std::string> class_names;
};

std::string scatter_svg(const ScatterSpec& spec);

/// Sharpe ratio per group count: TS_g bars, RND_g dots and one horizontal
/// line per single-row benchmark.
std::string sharpe_chart_svg(const std::vector<SummaryRow>& rows);

}  // namespace clustfolio::cli
