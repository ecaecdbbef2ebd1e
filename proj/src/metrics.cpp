#include "peval/metrics.hpp"

#include "peval/ingest.hpp"

namespace peval {

std::string_view direction_tag(Direction d) noexcept {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Flat: return "flat";
  }
  return "flat";
}

Direction direction_of(double range_return) noexcept {
  if (range_return > 0.0) return Direction::Up;
  if (range_return < 0.0) return Direction::Down;
  return Direction::Flat;
}

// Upper-inclusive bands on |rho|.
CorrelationBand correlation_band(double rho) {
  const double a = std::abs(rho);
  if (!(a <= 1.0)) throw Error(Errc::OutOfRange, "|rho| exceeds 1");
  if (a > 0.9) return CorrelationBand::VeryHigh;
  if (a > 0.7) return CorrelationBand::High;
  if (a > 0.5) return CorrelationBand::Moderate;
  if (a > 0.3) return CorrelationBand::Low;
  return CorrelationBand::Negligible;
}

std::string interpret_correlation(double rho) {
  const CorrelationBand band = correlation_band(rho);
  const char* sign = rho > 0.0 ? "positive" : "negative";
  switch (band) {
    case CorrelationBand::VeryHigh: return std::string("Very high ") + sign;
    case CorrelationBand::High: return std::string("High ") + sign;
    case CorrelationBand::Moderate: return std::string("Moderate ") + sign;
    case CorrelationBand::Low: return std::string("Low ") + sign;
    case CorrelationBand::Negligible:
      if (rho == 0.0) return "Negligible";
      return std::string("Negligible (") + sign + ")";
  }
  return "Negligible";
}

ReturnSummary range_return(double start_price, double end_price) {
  if (!(start_price > 0.0) || !(end_price > 0.0) || !std::isfinite(start_price) || !std::isfinite(end_price))
    throw Error(Errc::OutOfRange, "range return needs positive finite prices");
  ReturnSummary r;
  r.start_price = start_price;
  r.end_price = end_price;
  r.range_return = (end_price - start_price) / start_price;
  r.direction = direction_of(r.range_return);
  return r;
}

ReturnSummary range_return(std::span<const double> prices) {
  if (prices.size() < 2) throw Error(Errc::TooShort, "range return needs a segment of at least 2 prices");
  return range_return(prices.front(), prices.back());
}

ReturnSummary range_return(const PriceSeries& segment) {
  if (segment.size() < 2) throw Error(Errc::TooShort, "range return needs a segment of at least 2 prices");
  return range_return(segment.close(0), segment.close(segment.size() - 1));
}

}  // namespace peval
