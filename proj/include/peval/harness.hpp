#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "peval/ingest.hpp"
#include "peval/metrics.hpp"
#include "peval/models.hpp"
#include "peval/oed.hpp"

namespace peval {

struct RunRecord {
  std::string symbol;
  Architecture architecture = Architecture::MLP;
  FactorAssignment assignment;
  MetricReport metrics;
  ReturnSummary control;  // raw test interval, model-free
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or "failed:<errc tag>"

  bool ok() const noexcept { return status == "ok"; }
};

// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// seed = mix(mix(mix(splitmix64(base), fnv1a64(symbol)), fnv1a64(arch tag)), plan_row)
// with mix(h, v) = splitmix64(h ^ v).
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view symbol, Architecture architecture,
                          std::size_t plan_row) noexcept;
inline constexpr std::string_view kSeedDerivation =
    "mix(mix(mix(splitmix64(base_seed), fnv1a64(symbol)), fnv1a64(architecture_tag)), plan_row); "
    "mix(h, v) = splitmix64(h xor v)";

ReturnSummary no_treatment_control(const PriceSeries& test);

// One (stock, architecture, assignment) run. Failures are captured in
// `status` rather than thrown.
RunRecord run_single(const PriceSeries& stock, const SplitSpec& split, Architecture architecture,
                     const FactorAssignment& assignment, std::uint64_t base_seed);

// Every (stock, architecture, assignment) combination, sorted by
// (symbol, architecture, plan_row). `jobs` worker threads; output does not
// depend on it.
std::vector<RunRecord> run_experiment(const std::vector<PriceSeries>& stocks, const SplitSpec& split,
                                      const std::vector<Architecture>& architectures,
                                      const std::vector<FactorAssignment>& plan, std::uint64_t base_seed,
                                      std::size_t jobs = 1);

void sort_records(std::vector<RunRecord>& records);

enum class GroupKey { Stock, Architecture };
enum class Criterion { MAE, MSE, RMSE, R2 };

std::optional<Criterion> parse_criterion(std::string_view name) noexcept;

// Best ok record per group (MAE/MSE/RMSE minimized, R2 maximized); ties go
// to architecture order, then plan_row, then symbol. Groups come out in key order.
std::vector<RunRecord> select_best_per_group(const std::vector<RunRecord>& records, GroupKey key,
                                             Criterion criterion);

enum class DivergenceKind { SmallGapConflict, LargeGap };

struct DivergenceCase {
  std::size_t record_a = 0;  // indices into the input records
  std::size_t record_b = 0;
  double metric_gap = 0.0;  // |MAE_a - MAE_b|
  bool direction_conflict = false;
  DivergenceKind kind = DivergenceKind::SmallGapConflict;
};

// Pairs with gap <= threshold and opposite (up vs down) controls, plus every
// pair with gap > threshold as large-difference context. Failed records are skipped.
std::vector<DivergenceCase> find_divergences(const std::vector<RunRecord>& records, double metric_gap_threshold);

inline constexpr std::array<const char*, 5> kCorrelationLabels{"MAE", "MSE", "RMSE", "R2", "SRD"};

struct CorrelationMatrix {
  std::array<std::string, 5> labels{"MAE", "MSE", "RMSE", "R2", "SRD"};
  Eigen::Matrix<double, 5, 5> cells = Eigen::Matrix<double, 5, 5>::Identity();
  std::size_t n = 0;
  // rho of each PE metric against the +-1 direction sign; empty when the
  // sign column is constant.
  std::array<std::optional<double>, 4> sign_srd{};

  std::string interpretation(int i, int j) const { return interpret_correlation(cells(i, j)); }
};

// Columns MAE, MSE, RMSE, R2 and SRD (signed control return) over the ok
// records, then pairwise Pearson.
CorrelationMatrix correlate_metrics_with_direction(const std::vector<RunRecord>& records);

enum class Pooling { BestPerStock, AllRuns };
std::optional<Pooling> parse_pooling(std::string_view text) noexcept;
std::string_view pooling_tag(Pooling p) noexcept;

// Population used for correlation and divergence analysis.
std::vector<RunRecord> pool_records(const std::vector<RunRecord>& records, Pooling pooling);

// Reflection check in raw price space. `model` (trained on data scaled by
// `scale`) predicts the windows of `series`; the reflected model predicts the
// windows of c - series by reflecting its input back and returning
// c - prediction. When every actual and prediction lies in [c/2, 2c] each
// mirrored residual is the exact negation of the original one.
struct MirrorOutcome {
  MetricReport original;
  MetricReport mirrored;
  ReturnSummary original_control;
  ReturnSummary mirrored_control;
  Eigen::VectorXd predicted;
  Eigen::VectorXd mirrored_predicted;
  bool exact_domain = false;
};

MirrorOutcome mirror_test(const TrainedModel& model, const MinMaxScale& scale, const PriceSeries& series, double c,
                          std::size_t hop);

}  // namespace peval
