#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "peval/ingest.hpp"

namespace peval {

enum class SynthKind { RandomWalk, Trending, MeanReverting, SinePlusNoise, MirroredPair };

const char* synth_kind_tag(SynthKind kind) noexcept;
std::optional<SynthKind> parse_synth_kind(const std::string& tag) noexcept;

struct SynthSpec {
  SynthKind kind = SynthKind::RandomWalk;
  std::size_t length = 200;
  double drift = 0.0;        // per step
  double noise_scale = 1.0;  // std of the Gaussian shock per step
  std::uint64_t seed = 1;
  double start_price = 100.0;
  double reversion = 0.1;    // mean_reverting pull toward start_price per step
  double amplitude = 10.0;   // sine_plus_noise
  double period = 50.0;      // sine_plus_noise, in steps
  std::string symbol = "SYN";
  Date start_date = Date{std::chrono::year{2011}, std::chrono::January, std::chrono::day{3}};
};

struct SynthResult {
  PriceSeries series;
  std::optional<PriceSeries> mirror;  // set for MirroredPair: c - series with c = 2 max(series)
  bool floored = false;               // some price hit the positive floor
};

inline constexpr double kPriceFloor = 0.01;

// Deterministic given the seed. Dates are consecutive weekdays from start_date.
SynthResult generate(const SynthSpec& spec);

// Standard normal variate by Box-Muller from unit_uniform draws.
double standard_normal(std::mt19937_64& rng);

// The 24-series acceptance battery: 8 random walks, 8 trending series with
// drifts +-{0.1, 0.2, 0.4, 0.8} x noise, 8 mean-reverting, T = 200, seeds 1..24,
// unit noise from a start price of 300 so the steepest downtrend stays positive.
std::vector<SynthSpec> acceptance_battery();

// Weekday dates starting at `start` (a weekend start rolls forward).
std::vector<Date> business_days(Date start, std::size_t count);

void write_price_csv(std::ostream& out, const PriceSeries& series);

}  // namespace peval
