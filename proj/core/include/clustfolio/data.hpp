#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace clustfolio {

/// Calendar label of a panel row. No trading-calendar arithmetic is done on
/// dates; they only order rows and label outputs.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  /// Parses `YYYY-MM-DD`; throws ParseError on anything else or on an
  /// impossible calendar day.
  static Date parse(std::string_view text);
  std::string to_string() const;

  auto operator<=>(const Date&) const = default;
};

/// Half-open row interval [begin, end).
struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

/// T x n matrix of strictly positive prices, rows in ascending date order.
class PricePanel {
 public:
  /// Validates every invariant: increasing unique dates, unique tickers,
  /// finite positive prices with matching shape.
  PricePanel(std::vector<Date> dates, std::vector<std::string> tickers, Eigen::MatrixXd prices);

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& tickers() const noexcept { return tickers_; }
  const Eigen::MatrixXd& prices() const noexcept { return prices_; }
  std::size_t rows() const noexcept { return dates_.size(); }
  std::size_t cols() const noexcept { return tickers_.size(); }

  bool operator==(const PricePanel& other) const;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> tickers_;
  Eigen::MatrixXd prices_;
};

/// (T-1) x n matrix of simple daily returns. Also used for grouped
/// sub-portfolio returns, in which case the tickers are group names.
class ReturnsPanel {
 public:
  ReturnsPanel(std::vector<Date> dates, std::vector<std::string> tickers, Eigen::MatrixXd returns);

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& tickers() const noexcept { return tickers_; }
  const Eigen::MatrixXd& returns() const noexcept { return returns_; }
  std::size_t rows() const noexcept { return dates_.size(); }
  std::size_t cols() const noexcept { return tickers_.size(); }

  /// Copy of the rows in `range`.
  ReturnsPanel slice(RowRange range) const;

 private:
  std::vector<Date> dates_;
  std::vector<std::string> tickers_;
  Eigen::MatrixXd returns_;
};

struct CompanyMeta {
  std::string ticker;
  std::string industry_code;
};

struct WindowSplit {
  RowRange train;
  RowRange validation;
  std::size_t test_point = 0;

  bool operator==(const WindowSplit&) const = default;
};

PricePanel load_price_csv(const std::filesystem::path& path);
void write_price_csv(const PricePanel& panel, const std::filesystem::path& path);

/// Reads `ticker,industry_code`. Codes must be numeric with at least four
/// digits.
std::vector<CompanyMeta> load_meta_csv(const std::filesystem::path& path);

ReturnsPanel compute_discrete_returns(const PricePanel& panel);

/// One split per feasible test point, shifting by one row each time.
/// Throws NoTestData when rows <= train_len + val_len.
std::vector<WindowSplit> rolling_windows(std::size_t rows, std::size_t train_len, std::size_t val_len);
std::vector<WindowSplit> rolling_windows(const ReturnsPanel& panel, std::size_t train_len, std::size_t val_len);

/// Daily-date labels starting at 2000-01-03, skipping weekends. Used when a
/// panel is synthesized rather than loaded.
std::vector<Date> synthetic_business_days(std::size_t count);

}  // namespace clustfolio
