#include "clustfolio/data.hpp"

#include "clustfolio/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

namespace clustfolio {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(int y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return (m == 2 && is_leap(y)) ? 29 : kDays[m - 1];
}

// Days since 1970-01-01 (proleptic Gregorian).
long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2 ? 1 : 0;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

Date civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return Date{static_cast<int>(m <= 2 ? y + 1 : y), m, d};
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

void check_returns(const Eigen::MatrixXd& returns) {
  for (Eigen::Index j = 0; j < returns.cols(); ++j) {
    for (Eigen::Index t = 0; t < returns.rows(); ++t) {
      const double r = returns(t, j);
      if (!std::isfinite(r) || r <= -1.0) {
        throw InvalidInput(fmt::format("return at row {}, column {} is {} (must be finite and > -1)", t, j, r));
      }
    }
  }
}

}  // namespace

Date Date::parse(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw ParseError(fmt::format("malformed date '{}', expected YYYY-MM-DD", text));
  }
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (!parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), m) ||
      !parse_number(text.substr(8, 2), d) || m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
    throw ParseError(fmt::format("malformed date '{}', expected YYYY-MM-DD", text));
  }
  return Date{y, m, d};
}

std::string Date::to_string() const { return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day); }

PricePanel::PricePanel(std::vector<Date> dates, std::vector<std::string> tickers, Eigen::MatrixXd prices)
    : dates_(std::move(dates)), tickers_(std::move(tickers)), prices_(std::move(prices)) {
  if (static_cast<std::size_t>(prices_.rows()) != dates_.size() ||
      static_cast<std::size_t>(prices_.cols()) != tickers_.size()) {
    throw InvalidInput(fmt::format("price matrix is {}x{} but panel has {} dates and {} tickers", prices_.rows(),
                                   prices_.cols(), dates_.size(), tickers_.size()));
  }
  for (std::size_t t = 1; t < dates_.size(); ++t) {
    if (dates_[t] == dates_[t - 1]) throw DuplicateDate("duplicate date " + dates_[t].to_string());
    if (dates_[t] < dates_[t - 1]) throw InvalidInput("price panel dates must be strictly increasing");
  }
  std::unordered_set<std::string> seen;
  for (const auto& tk : tickers_) {
    if (!seen.insert(tk).second) throw InvalidInput("duplicate ticker " + tk);
  }
  for (Eigen::Index j = 0; j < prices_.cols(); ++j) {
    for (Eigen::Index t = 0; t < prices_.rows(); ++t) {
      const double p = prices_(t, j);
      if (!std::isfinite(p) || p <= 0.0) {
        throw InvalidPrice(fmt::format("price {} for {} on {} is not strictly positive", p,
                                       tickers_[static_cast<std::size_t>(j)],
                                       dates_[static_cast<std::size_t>(t)].to_string()));
      }
    }
  }
}

bool PricePanel::operator==(const PricePanel& other) const {
  return dates_ == other.dates_ && tickers_ == other.tickers_ && prices_ == other.prices_;
}

ReturnsPanel::ReturnsPanel(std::vector<Date> dates, std::vector<std::string> tickers, Eigen::MatrixXd returns)
    : dates_(std::move(dates)), tickers_(std::move(tickers)), returns_(std::move(returns)) {
  if (static_cast<std::size_t>(returns_.rows()) != dates_.size() ||
      static_cast<std::size_t>(returns_.cols()) != tickers_.size()) {
    throw InvalidInput(fmt::format("returns matrix is {}x{} but panel has {} dates and {} tickers", returns_.rows(),
                                   returns_.cols(), dates_.size(), tickers_.size()));
  }
  check_returns(returns_);
}

ReturnsPanel ReturnsPanel::slice(RowRange range) const {
  if (range.begin > range.end || range.end > rows()) {
    throw InvalidInput(fmt::format("row range [{}, {}) outside panel of {} rows", range.begin, range.end, rows()));
  }
  std::vector<Date> d(dates_.begin() + static_cast<std::ptrdiff_t>(range.begin),
                      dates_.begin() + static_cast<std::ptrdiff_t>(range.end));
  return ReturnsPanel(std::move(d), tickers_,
                      returns_.middleRows(static_cast<Eigen::Index>(range.begin), static_cast<Eigen::Index>(range.size())));
}

PricePanel load_price_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open price file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("price file " + path.string() + " is empty");
  const auto header = split_fields(line);
  if (header.empty() || header.front() != "date") {
    throw ParseError("price file header must start with 'date'");
  }
  std::vector<std::string> tickers;
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j].empty()) throw ParseError(fmt::format("empty ticker name in header column {}", j));
    tickers.emplace_back(header[j]);
  }
  if (tickers.empty()) throw ParseError("price file has no ticker columns");
  {
    std::set<std::string> uniq(tickers.begin(), tickers.end());
    if (uniq.size() != tickers.size()) throw ParseError("duplicate ticker in price file header");
  }

  std::vector<std::pair<Date, std::vector<double>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() > tickers.size() + 1) {
      throw ParseError(fmt::format("line {} has {} fields, expected {}", line_no, fields.size(), tickers.size() + 1));
    }
    Date date = Date::parse(fields[0]);
    std::vector<double> values(tickers.size());
    for (std::size_t j = 0; j < tickers.size(); ++j) {
      if (j + 1 >= fields.size() || fields[j + 1].empty()) throw MissingData(line_no, j);
      double v = 0.0;
      if (!parse_number(fields[j + 1], v)) {
        throw ParseError(fmt::format("line {}: cannot parse '{}' as a price", line_no, fields[j + 1]));
      }
      if (!std::isfinite(v) || v <= 0.0) {
        throw InvalidPrice(fmt::format("line {}: price {} for {} is not strictly positive", line_no, fields[j + 1],
                                       tickers[j]));
      }
      values[j] = v;
    }
    rows.emplace_back(date, std::move(values));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t t = 1; t < rows.size(); ++t) {
    if (rows[t].first == rows[t - 1].first) throw DuplicateDate("duplicate date " + rows[t].first.to_string());
  }

  std::vector<Date> dates;
  dates.reserve(rows.size());
  Eigen::MatrixXd prices(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(tickers.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    dates.push_back(rows[t].first);
    for (std::size_t j = 0; j < tickers.size(); ++j) {
      prices(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t].second[j];
    }
  }
  return PricePanel(std::move(dates), std::move(tickers), std::move(prices));
}

void write_price_csv(const PricePanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "date";
  for (const auto& tk : panel.tickers()) out << ',' << tk;
  out << '\n';
  for (std::size_t t = 0; t < panel.rows(); ++t) {
    out << panel.dates()[t].to_string();
    for (std::size_t j = 0; j < panel.cols(); ++j) {
      // shortest representation that round-trips exactly
      out << ',' << fmt::format("{}", panel.prices()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<CompanyMeta> load_meta_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metadata file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("metadata file " + path.string() + " is empty");
  const auto header = split_fields(line);
  if (header.size() != 2 || header[0] != "ticker" || header[1] != "industry_code") {
    throw ParseError("metadata header must be 'ticker,industry_code'");
  }
  std::vector<CompanyMeta> out;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 2 || f[0].empty()) throw ParseError(fmt::format("metadata line {} is malformed", line_no));
    if (f[1].size() < 4 || !std::all_of(f[1].begin(), f[1].end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw ParseError(fmt::format("metadata line {}: industry code '{}' must be at least 4 digits", line_no, f[1]));
    }
    if (!seen.insert(std::string(f[0])).second) {
      throw ParseError(fmt::format("metadata line {}: duplicate ticker '{}'", line_no, f[0]));
    }
    out.push_back(CompanyMeta{std::string(f[0]), std::string(f[1])});
  }
  return out;
}

ReturnsPanel compute_discrete_returns(const PricePanel& panel) {
  if (panel.rows() < 2) throw InsufficientData("need at least 2 price rows to compute returns");
  const auto& p = panel.prices();
  const Eigen::Index t_out = p.rows() - 1;
  Eigen::MatrixXd r = p.bottomRows(t_out).cwiseQuotient(p.topRows(t_out)).array() - 1.0;
  std::vector<Date> dates(panel.dates().begin() + 1, panel.dates().end());
  return ReturnsPanel(std::move(dates), panel.tickers(), std::move(r));
}

std::vector<WindowSplit> rolling_windows(std::size_t rows, std::size_t train_len, std::size_t val_len) {
  if (train_len < 1) throw InvalidConfig("train_len must be at least 1");
  if (rows <= train_len + val_len) {
    throw NoTestData(fmt::format("{} rows leave no test point after {} training and {} validation rows", rows,
                                 train_len, val_len));
  }
  const std::size_t count = rows - train_len - val_len;
  std::vector<WindowSplit> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    WindowSplit s;
    s.train = {k, k + train_len};
    s.validation = {k + train_len, k + train_len + val_len};
    s.test_point = k + train_len + val_len;
    out.push_back(s);
  }
  return out;
}

std::vector<WindowSplit> rolling_windows(const ReturnsPanel& panel, std::size_t train_len, std::size_t val_len) {
  return rolling_windows(panel.rows(), train_len, val_len);
}

std::vector<Date> synthetic_business_days(std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  long day = days_from_civil(2000, 1, 3);
  while (out.size() < count) {
    // 1970-01-01 was a Thursday; weekday 0 = Monday
    const long weekday = ((day % 7) + 7 + 3) % 7;
    if (weekday < 5) out.push_back(civil_from_days(day));
    ++day;
  }
  return out;
}

}  // namespace clustfolio
