#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "peval/error.hpp"

namespace peval {

class PriceSeries;

struct MetricReport {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double r_squared = 0.0;
  std::size_t sample_count = 0;
};

enum class Direction { Up, Down, Flat };

std::string_view direction_tag(Direction d) noexcept;  // "up", "down", "flat"
Direction direction_of(double range_return) noexcept;

struct ReturnSummary {
  double start_price = 0.0;
  double end_price = 0.0;
  double range_return = 0.0;  // signed fraction, (end - start) / start
  Direction direction = Direction::Flat;
};

struct SeriesStats {
  double mean = 0.0;
  double std = 0.0;  // population convention
  std::size_t count = 0;
};

enum class CorrelationBand { Negligible, Low, Moderate, High, VeryHigh };

struct CorrelationResult {
  double rho = 0.0;
  CorrelationBand band = CorrelationBand::Negligible;
  std::string interpretation;
};

namespace detail {

template <typename DA, typename DP>
void check_pair(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  if (actual.size() != predicted.size())
    throw Error(Errc::LengthMismatch, "actual and predicted lengths differ");
  if (actual.size() == 0) throw Error(Errc::EmptyInput, "metric input is empty");
  if (!actual.derived().array().isFinite().all() || !predicted.derived().array().isFinite().all())
    throw Error(Errc::OutOfRange, "metric input contains non-finite values");
}

template <typename DA, typename DP>
auto residuals(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  using Scalar = typename DA::Scalar;
  return Eigen::Array<Scalar, Eigen::Dynamic, 1>(actual.derived().array().reshaped() -
                                                 predicted.derived().array().reshaped());
}

}  // namespace detail

template <typename DA, typename DP>
typename DA::Scalar mse(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  detail::check_pair(actual, predicted);
  return detail::residuals(actual, predicted).square().mean();
}

template <typename DA, typename DP>
typename DA::Scalar rmse(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  using std::sqrt;
  return sqrt(mse(actual, predicted));
}

template <typename DA, typename DP>
typename DA::Scalar mae(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  detail::check_pair(actual, predicted);
  return detail::residuals(actual, predicted).abs().mean();
}

// 1 - mse / (mean squared deviation of `actual` around its own mean).
template <typename DA, typename DP>
typename DA::Scalar r_squared(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  detail::check_pair(actual, predicted);
  const auto y = actual.derived().array().reshaped();
  const auto baseline = (y - y.mean()).square().mean();
  if (!(baseline > 0)) throw Error(Errc::ConstantActual, "actual values are constant; R^2 is undefined");
  return 1 - detail::residuals(actual, predicted).square().mean() / baseline;
}

template <typename DA, typename DP>
MetricReport evaluate(const Eigen::DenseBase<DA>& actual, const Eigen::DenseBase<DP>& predicted) {
  MetricReport r;
  r.mse = mse(actual, predicted);
  r.rmse = std::sqrt(r.mse);
  r.mae = mae(actual, predicted);
  r.r_squared = r_squared(actual, predicted);
  r.sample_count = static_cast<std::size_t>(actual.size());
  return r;
}

template <typename D>
SeriesStats series_stats(const Eigen::DenseBase<D>& x) {
  SeriesStats s;
  s.count = static_cast<std::size_t>(x.size());
  if (s.count == 0) return s;
  const auto a = x.derived().array().reshaped();
  s.mean = a.mean();
  s.std = std::sqrt((a - s.mean).square().mean());
  return s;
}

CorrelationBand correlation_band(double rho);
std::string interpret_correlation(double rho);

inline constexpr double kRhoRoundingTolerance = 1e-12;

// Population-convention Pearson coefficient with its interpretation band.
template <typename DX, typename DY>
CorrelationResult pearson(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "pearson inputs differ in length");
  if (x.size() < 2) throw Error(Errc::TooShort, "pearson needs at least 2 pairs");
  const Eigen::ArrayXd dx = x.derived().array().reshaped().template cast<double>() - x.derived().mean();
  const Eigen::ArrayXd dy = y.derived().array().reshaped().template cast<double>() - y.derived().mean();
  const double sx = std::sqrt(dx.square().mean());
  const double sy = std::sqrt(dy.square().mean());
  if (!(sx > 0.0) || !(sy > 0.0)) throw Error(Errc::ConstantInput, "pearson input is constant");
  double rho = (dx * dy).mean() / (sx * sy);
  if (rho > 1.0 && rho <= 1.0 + kRhoRoundingTolerance) rho = 1.0;
  if (rho < -1.0 && rho >= -1.0 - kRhoRoundingTolerance) rho = -1.0;
  return {rho, correlation_band(rho), interpret_correlation(rho)};
}

ReturnSummary range_return(double start_price, double end_price);
ReturnSummary range_return(std::span<const double> prices);
ReturnSummary range_return(const PriceSeries& segment);

}  // namespace peval
