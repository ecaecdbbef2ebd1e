#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace peval {

using Date = std::chrono::year_month_day;

// Strict ISO-8601 calendar day, `YYYY-MM-DD`.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

struct Observation {
  Date date;
  double close;
};

// Dated univariate close-price sequence. Construction enforces strictly
// increasing dates, finite positive prices and at least two points.
class PriceSeries {
 public:
  PriceSeries(std::string symbol, std::vector<Observation> observations, std::string source = {});

  const std::string& symbol() const noexcept { return symbol_; }
  const std::string& source() const noexcept { return source_; }
  const std::vector<Observation>& observations() const noexcept { return observations_; }
  std::size_t size() const noexcept { return observations_.size(); }
  Date date(std::size_t i) const { return observations_.at(i).date; }
  double close(std::size_t i) const { return observations_.at(i).close; }
  Eigen::VectorXd closes() const;

 private:
  std::string symbol_;
  std::vector<Observation> observations_;
  std::string source_;
};

// One CSV row before validation; a missing field means empty, `null`, or
// unparseable in the source.
struct RawRecord {
  std::optional<Date> date;
  std::optional<double> close;
};

struct IntegrityReport {
  std::size_t missing_value_count = 0;
  std::size_t nonpositive_price_count = 0;
  std::size_t duplicate_date_count = 0;
  bool ok = true;
};

// Parses a Yahoo-style export into a PriceSeries using the Close column.
// Any row that fails to parse aborts the load (Errc::MalformedRow, index =
// 1-based line number). Rows may arrive in any order.
PriceSeries load_price_csv(std::istream& in, std::string symbol);
PriceSeries load_price_csv_file(const std::string& path, std::string symbol);

// Lenient parse used for integrity reporting: bad cells become nullopt.
std::vector<RawRecord> read_raw_records(std::istream& in);

IntegrityReport verify_integrity(std::span<const RawRecord> rows);
IntegrityReport verify_integrity(const PriceSeries& series);

// Half-open index range [first, last).
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const noexcept { return last > first ? last - first : 0; }
};

struct MinMaxScale {
  double min = 0.0;
  double max = 1.0;

  double normalize(double price) const noexcept { return (price - min) / (max - min); }
  double denormalize(double value) const noexcept { return value * (max - min) + min; }
};

struct NormalizedSeries {
  std::string symbol;
  Eigen::VectorXd values;
  double scale_min = 0.0;
  double scale_max = 1.0;

  MinMaxScale scale() const noexcept { return {scale_min, scale_max}; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

MinMaxScale fit_minmax(const PriceSeries& series, IndexRange fit_range);
NormalizedSeries apply_scale(const PriceSeries& series, MinMaxScale scale);

// Min-max scaling fitted on `fit_range` only and applied to the whole series.
NormalizedSeries normalize_minmax(const PriceSeries& series, IndexRange fit_range);
double denormalize(const NormalizedSeries& norm, double value) noexcept;

struct HurstEstimate {
  double exponent = 0.0;
  double r_squared = 0.0;  // of the log(R/S) vs log(size) fit
  std::vector<std::size_t> block_sizes;
  std::vector<double> mean_rs;
};

// Rescaled-range estimate applied directly to `values` (treated as the
// increment process). Block sizes are 8, 16, ... up to size/2; only full
// contiguous blocks are used.
HurstEstimate hurst_exponent(const Eigen::Ref<const Eigen::VectorXd>& values);

struct HurstScreen {
  HurstEstimate estimate;
  bool accepted = false;
};

inline constexpr double kDefaultHurstMinFitR2 = 0.9;

// Advisory screen on the first differences of the min-max normalized series.
HurstScreen screen_hurst(const PriceSeries& series, double min_fit_r2 = kDefaultHurstMinFitR2);

struct WindowedDataset {
  Eigen::MatrixXd inputs;  // one sample per row, window_length columns
  Eigen::VectorXd targets;
  std::size_t window_length = 0;
  std::size_t hop = 0;
  std::vector<std::size_t> source_indices;

  std::size_t size() const noexcept { return static_cast<std::size_t>(targets.size()); }
};

// Sample k: inputs = values[k .. k+L-1], target = values[k+L+H].
WindowedDataset make_windows(const NormalizedSeries& norm, std::size_t window_length, std::size_t hop);

struct SplitSpec {
  Date train_end;
  Date test_start;
  Date test_end;

  bool valid() const noexcept { return train_end < test_start && test_start <= test_end; }
};

// Parses `train_end,test_start,test_end`.
SplitSpec parse_split(std::string_view text);

std::pair<PriceSeries, PriceSeries> split_by_date(const PriceSeries& series, const SplitSpec& spec);

}  // namespace peval
