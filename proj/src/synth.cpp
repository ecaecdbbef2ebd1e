#include "peval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "peval/error.hpp"
#include "peval/network.hpp"

namespace peval {

const char* synth_kind_tag(SynthKind kind) noexcept {
  switch (kind) {
    case SynthKind::RandomWalk: return "random_walk";
    case SynthKind::Trending: return "trending";
    case SynthKind::MeanReverting: return "mean_reverting";
    case SynthKind::SinePlusNoise: return "sine_plus_noise";
    case SynthKind::MirroredPair: return "mirrored_pair";
  }
  return "random_walk";
}

std::optional<SynthKind> parse_synth_kind(const std::string& tag) noexcept {
  for (auto k : {SynthKind::RandomWalk, SynthKind::Trending, SynthKind::MeanReverting, SynthKind::SinePlusNoise,
                 SynthKind::MirroredPair})
    if (tag == synth_kind_tag(k)) return k;
  return std::nullopt;
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<Date> business_days(Date start, std::size_t count) {
  using namespace std::chrono;
  std::vector<Date> out;
  out.reserve(count);
  sys_days day{start};
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.emplace_back(day);
    day += days{1};
  }
  return out;
}

SynthResult generate(const SynthSpec& spec) {
  if (spec.length < 2) throw Error(Errc::BadSpec, "synthetic series needs length >= 2");
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.drift) || !(spec.start_price > 0.0))
    throw Error(Errc::BadSpec, "synthetic spec needs finite drift, non-negative noise, positive start");
  if (spec.kind == SynthKind::SinePlusNoise && !(spec.period > 0.0))
    throw Error(Errc::BadSpec, "sine period must be positive");

  std::mt19937_64 rng(spec.seed);
  std::vector<double> prices(spec.length);
  bool floored = false;
  auto floor_price = [&](double p) {
    if (p < kPriceFloor) {
      floored = true;
      return kPriceFloor;
    }
    return p;
  };
  prices[0] = spec.start_price;
  for (std::size_t t = 1; t < spec.length; ++t) {
    const double shock = spec.noise_scale > 0.0 ? spec.noise_scale * standard_normal(rng) : 0.0;
    const double prev = prices[t - 1];
    double p = 0.0;
    switch (spec.kind) {
      case SynthKind::RandomWalk:
      case SynthKind::Trending:
      case SynthKind::MirroredPair: p = prev + spec.drift + shock; break;
      case SynthKind::MeanReverting: p = prev + spec.reversion * (spec.start_price - prev) + spec.drift + shock; break;
      case SynthKind::SinePlusNoise:
        p = spec.start_price + spec.drift * static_cast<double>(t) +
            spec.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / spec.period) + shock;
        break;
    }
    prices[t] = floor_price(p);
  }

  const auto dates = business_days(spec.start_date, spec.length);
  auto build = [&](const std::string& symbol, const std::vector<double>& values) {
    std::vector<Observation> obs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) obs[i] = {dates[i], values[i]};
    return PriceSeries(symbol, std::move(obs), std::string("synth:") + synth_kind_tag(spec.kind));
  };

  SynthResult result{build(spec.symbol, prices), std::nullopt, floored};
  if (spec.kind == SynthKind::MirroredPair) {
    const double c = 2.0 * *std::max_element(prices.begin(), prices.end());
    std::vector<double> mirrored(prices.size());
    std::transform(prices.begin(), prices.end(), mirrored.begin(), [c](double p) { return c - p; });
    result.mirror = build(spec.symbol + "_M", mirrored);
  }
  return result;
}

std::vector<SynthSpec> acceptance_battery() {
  std::vector<SynthSpec> out;
  const double noise = 1.0;
  const double drifts[8] = {0.1, -0.1, 0.2, -0.2, 0.4, -0.4, 0.8, -0.8};
  char name[16];
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    SynthSpec s;
    s.length = 200;
    s.noise_scale = noise;
    s.start_price = 300.0;
    s.seed = seed;
    if (seed <= 8) {
      s.kind = SynthKind::RandomWalk;
      std::snprintf(name, sizeof name, "RW%02u", static_cast<unsigned>(seed));
    } else if (seed <= 16) {
      s.kind = SynthKind::Trending;
      s.drift = drifts[seed - 9] * noise;
      std::snprintf(name, sizeof name, "TR%02u", static_cast<unsigned>(seed));
    } else {
      s.kind = SynthKind::MeanReverting;
      std::snprintf(name, sizeof name, "MR%02u", static_cast<unsigned>(seed));
    }
    s.symbol = name;
    out.push_back(s);
  }
  return out;
}

void write_price_csv(std::ostream& out, const PriceSeries& series) {
  out << "Date,Close\n";
  char buf[40];
  for (const auto& o : series.observations()) {
    std::snprintf(buf, sizeof buf, "%.17g", o.close);
    out << format_date(o.date) << ',' << buf << '\n';
  }
}

}  // namespace peval
