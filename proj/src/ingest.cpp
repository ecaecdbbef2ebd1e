#include "peval/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>

#include "peval/error.hpp"

namespace peval {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

bool blank(std::string_view line) { return trim(line).empty(); }

struct Header {
  std::size_t date = 0;
  std::size_t close = 0;
};

Header read_header(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    auto fields = split_fields(line);
    std::optional<std::size_t> date, close;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i] == "Date") date = i;
      if (fields[i] == "Close") close = i;
    }
    if (!date) throw Error(Errc::MissingColumn, "header lacks a Date column", std::nullopt, "Date");
    if (!close) throw Error(Errc::MissingColumn, "header lacks a Close column", std::nullopt, "Close");
    return {*date, *close};
  }
  throw Error(Errc::MissingColumn, "input has no header row", std::nullopt, "Date");
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto number = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || ptr != text.data() + pos + len) return std::nullopt;
    return v;
  };
  auto y = number(0, 4), m = number(5, 2), d = number(8, 2);
  if (!y || !m || !d) return std::nullopt;
  Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
            std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

PriceSeries::PriceSeries(std::string symbol, std::vector<Observation> observations, std::string source)
    : symbol_(std::move(symbol)), observations_(std::move(observations)), source_(std::move(source)) {
  if (observations_.size() < 2)
    throw Error(Errc::EmptySeries, "series '" + symbol_ + "' needs at least 2 observations");
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const double p = observations_[i].close;
    if (!std::isfinite(p) || p <= 0.0)
      throw Error(Errc::InvalidSeries, "series '" + symbol_ + "' has a non-positive or non-finite price", i);
    if (i > 0 && !(observations_[i - 1].date < observations_[i].date))
      throw Error(Errc::InvalidSeries, "series '" + symbol_ + "' dates are not strictly increasing", i);
  }
}

Eigen::VectorXd PriceSeries::closes() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(observations_.size()));
  for (std::size_t i = 0; i < observations_.size(); ++i) out[static_cast<Eigen::Index>(i)] = observations_[i].close;
  return out;
}

PriceSeries load_price_csv(std::istream& in, std::string symbol) {
  const Header header = read_header(in);
  const std::size_t width = std::max(header.date, header.close) + 1;

  struct Row {
    Observation obs;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto fields = split_fields(line);
    if (fields.size() < width)
      throw Error(Errc::MalformedRow, "row " + std::to_string(line_no) + " has too few fields", line_no);
    auto date = parse_date(fields[header.date]);
    auto close = parse_real(fields[header.close]);
    if (!date) throw Error(Errc::MalformedRow, "row " + std::to_string(line_no) + " has an invalid date", line_no);
    if (!close || *close <= 0.0)
      throw Error(Errc::MalformedRow, "row " + std::to_string(line_no) + " has an invalid close price", line_no);
    rows.push_back({{*date, *close}, line_no});
  }
  if (rows.size() < 2) throw Error(Errc::EmptySeries, "fewer than 2 valid rows for '" + symbol + "'");

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.obs.date < b.obs.date; });
  std::vector<Observation> obs;
  obs.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].obs.date == rows[i - 1].obs.date)
      throw Error(Errc::MalformedRow, "row " + std::to_string(rows[i].line) + " repeats date " +
                                          format_date(rows[i].obs.date),
                  rows[i].line);
    obs.push_back(rows[i].obs);
  }
  return PriceSeries(std::move(symbol), std::move(obs), "csv");
}

PriceSeries load_price_csv_file(const std::string& path, std::string symbol) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path, std::nullopt, path);
  auto series = load_price_csv(in, std::move(symbol));
  return PriceSeries(series.symbol(), series.observations(), path);
}

std::vector<RawRecord> read_raw_records(std::istream& in) {
  const Header header = read_header(in);
  std::vector<RawRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    auto fields = split_fields(line);
    RawRecord rec;
    if (header.date < fields.size()) rec.date = parse_date(fields[header.date]);
    if (header.close < fields.size()) rec.close = parse_real(fields[header.close]);
    out.push_back(rec);
  }
  return out;
}

IntegrityReport verify_integrity(std::span<const RawRecord> rows) {
  IntegrityReport report;
  std::set<int> seen;  // days since epoch
  for (const auto& row : rows) {
    if (!row.date || !row.close) ++report.missing_value_count;
    if (row.close && *row.close <= 0.0) ++report.nonpositive_price_count;
    if (row.date) {
      const int day = std::chrono::sys_days{*row.date}.time_since_epoch().count();
      if (!seen.insert(day).second) ++report.duplicate_date_count;
    }
  }
  report.ok = report.missing_value_count == 0 && report.nonpositive_price_count == 0 &&
              report.duplicate_date_count == 0;
  return report;
}

IntegrityReport verify_integrity(const PriceSeries& series) {
  std::vector<RawRecord> rows;
  rows.reserve(series.size());
  for (const auto& o : series.observations()) rows.push_back({o.date, o.close});
  return verify_integrity(rows);
}

MinMaxScale fit_minmax(const PriceSeries& series, IndexRange fit_range) {
  if (fit_range.last > series.size() || fit_range.size() < 2)
    throw Error(Errc::DegenerateRange, "fit range must hold at least 2 observations of the series");
  double lo = series.close(fit_range.first), hi = lo;
  for (std::size_t i = fit_range.first; i < fit_range.last; ++i) {
    lo = std::min(lo, series.close(i));
    hi = std::max(hi, series.close(i));
  }
  if (!(lo < hi)) throw Error(Errc::DegenerateRange, "all prices in the fit range are equal");
  return {lo, hi};
}

NormalizedSeries apply_scale(const PriceSeries& series, MinMaxScale scale) {
  NormalizedSeries out;
  out.symbol = series.symbol();
  out.scale_min = scale.min;
  out.scale_max = scale.max;
  out.values = series.closes().unaryExpr([scale](double p) { return scale.normalize(p); });
  return out;
}

NormalizedSeries normalize_minmax(const PriceSeries& series, IndexRange fit_range) {
  return apply_scale(series, fit_minmax(series, fit_range));
}

double denormalize(const NormalizedSeries& norm, double value) noexcept { return norm.scale().denormalize(value); }

HurstEstimate hurst_exponent(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  if (n < 64) throw Error(Errc::TooShort, "Hurst estimation needs at least 64 points", static_cast<std::size_t>(n));
  if (values.maxCoeff() == values.minCoeff()) throw Error(Errc::ZeroVariance, "Hurst input is constant");

  HurstEstimate est;
  std::vector<double> log_size, log_rs;
  for (Eigen::Index size = 8; size <= n / 2; size *= 2) {
    double sum_rs = 0.0;
    Eigen::Index used = 0;
    for (Eigen::Index start = 0; start + size <= n; start += size) {
      const auto block = values.segment(start, size);
      const Eigen::ArrayXd centered = block.array() - block.mean();
      const double sd = std::sqrt(centered.square().mean());
      if (sd == 0.0) continue;
      double cum = 0.0, lo = 0.0, hi = 0.0;
      for (Eigen::Index i = 0; i < size; ++i) {
        cum += centered[i];
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
      }
      sum_rs += (hi - lo) / sd;
      ++used;
    }
    if (used == 0) continue;
    const double mean_rs = sum_rs / static_cast<double>(used);
    est.block_sizes.push_back(static_cast<std::size_t>(size));
    est.mean_rs.push_back(mean_rs);
    log_size.push_back(std::log(static_cast<double>(size)));
    log_rs.push_back(std::log(mean_rs));
  }
  if (log_size.size() < 2) throw Error(Errc::ZeroVariance, "too few non-degenerate block sizes for a Hurst fit");

  const Eigen::Map<const Eigen::VectorXd> x(log_size.data(), static_cast<Eigen::Index>(log_size.size()));
  const Eigen::Map<const Eigen::VectorXd> y(log_rs.data(), static_cast<Eigen::Index>(log_rs.size()));
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = dx.square().sum();
  const double sxy = (dx * dy).sum();
  const double syy = dy.square().sum();
  est.exponent = sxy / sxx;
  est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return est;
}

HurstScreen screen_hurst(const PriceSeries& series, double min_fit_r2) {
  const auto norm = normalize_minmax(series, {0, series.size()});
  const Eigen::Index n = norm.values.size();
  const Eigen::VectorXd increments = norm.values.tail(n - 1) - norm.values.head(n - 1);
  HurstScreen screen;
  screen.estimate = hurst_exponent(increments);
  screen.accepted = screen.estimate.r_squared >= min_fit_r2;
  return screen;
}

WindowedDataset make_windows(const NormalizedSeries& norm, std::size_t window_length, std::size_t hop) {
  const std::size_t total = norm.size();
  if (window_length < 1) throw Error(Errc::InsufficientData, "window length must be at least 1");
  if (total <= window_length + hop)
    throw Error(Errc::InsufficientData, "series of length " + std::to_string(total) +
                                            " is too short for window " + std::to_string(window_length) +
                                            " with hop " + std::to_string(hop));
  const std::size_t count = total - window_length - hop;
  WindowedDataset ds;
  ds.window_length = window_length;
  ds.hop = hop;
  ds.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(window_length));
  ds.targets.resize(static_cast<Eigen::Index>(count));
  ds.source_indices.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    ds.inputs.row(row) = norm.values.segment(row, static_cast<Eigen::Index>(window_length)).transpose();
    const std::size_t target = k + window_length + hop;
    ds.targets[row] = norm.values[static_cast<Eigen::Index>(target)];
    ds.source_indices.push_back(target);
  }
  return ds;
}

SplitSpec parse_split(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    auto comma = text.find(',', start);
    parts.push_back(trim(text.substr(start, comma == text.npos ? text.npos : comma - start)));
    if (comma == text.npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) throw Error(Errc::ConfigError, "split must be train_end,test_start,test_end");
  SplitSpec spec{};
  const std::optional<Date> dates[3] = {parse_date(parts[0]), parse_date(parts[1]), parse_date(parts[2])};
  for (const auto& d : dates)
    if (!d) throw Error(Errc::ConfigError, "split contains an invalid date: " + std::string(text));
  spec = {*dates[0], *dates[1], *dates[2]};
  if (!spec.valid()) throw Error(Errc::ConfigError, "split requires train_end < test_start <= test_end");
  return spec;
}

std::pair<PriceSeries, PriceSeries> split_by_date(const PriceSeries& series, const SplitSpec& spec) {
  if (!spec.valid()) throw Error(Errc::ConfigError, "split requires train_end < test_start <= test_end");
  std::vector<Observation> train, test;
  for (const auto& o : series.observations()) {
    if (o.date <= spec.train_end)
      train.push_back(o);
    else if (spec.test_start <= o.date && o.date <= spec.test_end)
      test.push_back(o);
  }
  if (train.empty() || test.empty())
    throw Error(Errc::EmptyPartition, std::string("split leaves the ") + (train.empty() ? "training" : "test") +
                                          " partition of '" + series.symbol() + "' empty");
  if (train.size() < 2 || test.size() < 2)
    throw Error(Errc::EmptyPartition, "split partition of '" + series.symbol() + "' has a single observation");
  return {PriceSeries(series.symbol(), std::move(train), series.source()),
          PriceSeries(series.symbol(), std::move(test), series.source())};
}

}  // namespace peval
