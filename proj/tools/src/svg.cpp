#include "clustfolio/cli/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace clustfolio::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(std::abs(lo) * 0.1, 0.5);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.06 * (hi - lo);
  return {lo - pad, hi + pad};
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

std::string header(std::string_view title) {
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  s += fmt::format("<text x=\"{:.1f}\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
                   kLeft + (kWidth - kLeft - kRight) / 2.0, escape(title));
  return s;
}

std::string y_axis(const Range& y, double plot_h) {
  std::string s;
  const double step = nice_step(y.hi - y.lo);
  for (double v = std::ceil(y.lo / step) * step; v <= y.hi + 1e-12; v += step) {
    const double py = kTop + plot_h * (y.hi - v) / (y.hi - y.lo);
    const double shown = std::abs(v) < step * 1e-9 ? 0.0 : v;
    s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#dddddd\"/>\n", kLeft, py,
                     kWidth - kRight, py);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6, py + 4, shown);
  }
  return s;
}

}  // namespace

const std::array<std::string_view, 20>& palette() {
  static constexpr std::array<std::string_view, 20> colors = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
      "#aec7e8", "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5"};
  return colors;
}

std::string scatter_svg(const ScatterSpec& spec) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const Eigen::Index n = spec.points.rows();
  Range xr{0.0, 1.0};
  Range yr{0.0, 1.0};
  if (n > 0) {
    xr = padded(spec.points.col(0).minCoeff(), spec.points.col(0).maxCoeff());
    yr = padded(spec.points.col(1).minCoeff(), spec.points.col(1).maxCoeff());
  }

  std::string s = header(spec.title);
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444444\"/>\n", kLeft,
                   kTop, plot_w, plot_h);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">y1</text>\n", kLeft + plot_w / 2,
                   kHeight - 20);
  s += fmt::format("<text x=\"20\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1f})\">y2</text>\n",
                   kTop + plot_h / 2, kTop + plot_h / 2);

  const auto& colors = palette();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double px = kLeft + plot_w * (spec.points(i, 0) - xr.lo) / (xr.hi - xr.lo);
    const double py = kTop + plot_h * (yr.hi - spec.points(i, 1)) / (yr.hi - yr.lo);
    const std::size_t cls = spec.classes.empty() ? 0 : spec.classes[static_cast<std::size_t>(i)];
    s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\" fill=\"{}\" fill-opacity=\"0.85\"/>\n", px, py,
                     colors[cls % colors.size()]);
  }

  if (!spec.class_names.empty()) {
    s += "<g class=\"legend\">\n";
    for (std::size_t c = 0; c < spec.class_names.size(); ++c) {
      const double ly = kTop + 8 + 18.0 * static_cast<double>(c);
      const double lx = kWidth - kRight + 16;
      s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"5\" fill=\"{}\"/>\n", lx, ly, colors[c % colors.size()]);
      s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", lx + 10, ly + 4, escape(spec.class_names[c]));
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string sharpe_chart_svg(const std::vector<SummaryRow>& rows) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  std::map<std::size_t, double> ts;
  std::map<std::size_t, double> rnd;
  std::vector<std::pair<std::string, double>> refs;
  std::vector<double> all = {0.0};
  for (const auto& r : rows) {
    if (!r.sharpe_annualized) continue;
    const double v = *r.sharpe_annualized;
    all.push_back(v);
    if (r.strategy.rfind("TS_", 0) == 0) {
      ts[r.g] = v;
    } else if (r.strategy.rfind("RND_", 0) == 0) {
      rnd[r.g] = v;
    } else {
      refs.emplace_back(r.strategy, v);
    }
  }
  std::vector<std::size_t> gs;
  for (const auto& [g, v] : ts) gs.push_back(g);
  for (const auto& [g, v] : rnd) {
    if (!ts.count(g)) gs.push_back(g);
  }
  std::sort(gs.begin(), gs.end());
  const Range y = padded(*std::min_element(all.begin(), all.end()), *std::max_element(all.begin(), all.end()));
  auto to_y = [&](double v) { return kTop + plot_h * (y.hi - v) / (y.hi - y.lo); };

  std::string s = header("Annualized Sharpe ratio by number of groups");
  s += y_axis(y, plot_h);
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444444\"/>\n", kLeft,
                   kTop, plot_w, plot_h);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">number of groups g</text>\n",
                   kLeft + plot_w / 2, kHeight - 16);
  s += fmt::format(
      "<text x=\"18\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.1f})\">annualized Sharpe "
      "ratio</text>\n",
      kTop + plot_h / 2);

  const double slot = gs.empty() ? plot_w : plot_w / static_cast<double>(gs.size());
  const double zero_y = to_y(0.0);
  const auto& colors = palette();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    if (auto it = ts.find(gs[i]); it != ts.end()) {
      const double top = std::min(zero_y, to_y(it->second));
      const double h = std::abs(zero_y - to_y(it->second));
      s += fmt::format("<rect class=\"ts\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                       cx - slot * 0.3, top, slot * 0.6, h, colors[0]);
    }
    if (auto it = rnd.find(gs[i]); it != rnd.end()) {
      s += fmt::format("<circle class=\"rnd\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"/>\n", cx,
                       to_y(it->second), colors[1]);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", cx, kTop + plot_h + 18,
                     gs[i]);
  }

  std::vector<std::pair<std::string, std::string_view>> legend;
  if (!ts.empty()) legend.emplace_back("TS_g", colors[0]);
  if (!rnd.empty()) legend.emplace_back("RND_g", colors[1]);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto color = colors[(i + 2) % colors.size()];
    const double ry = to_y(refs[i].second);
    s += fmt::format(
        "<line class=\"reference\" x1=\"{:.1f}\" y1=\"{:.2f}\" x2=\"{:.1f}\" y2=\"{:.2f}\" stroke=\"{}\" "
        "stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n",
        kLeft, ry, kWidth - kRight, ry, color);
    legend.emplace_back(refs[i].first, color);
  }
  s += "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < legend.size(); ++i) {
    const double ly = kTop + 8 + 18.0 * static_cast<double>(i);
    const double lx = kWidth - kRight + 16;
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n", lx - 5, ly - 5,
                     legend[i].second);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", lx + 10, ly + 4, escape(legend[i].first));
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace clustfolio::cli
