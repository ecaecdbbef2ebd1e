#include "peval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <thread>
#include <tuple>

namespace peval {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view symbol, Architecture architecture,
                          std::size_t plan_row) noexcept {
  auto mix = [](std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ v); };
  std::uint64_t h = splitmix64(base_seed);
  h = mix(h, fnv1a64(symbol));
  h = mix(h, fnv1a64(architecture_tag(architecture)));
  return mix(h, static_cast<std::uint64_t>(plan_row));
}

ReturnSummary no_treatment_control(const PriceSeries& test) { return range_return(test); }

RunRecord run_single(const PriceSeries& stock, const SplitSpec& split, Architecture architecture,
                     const FactorAssignment& assignment, std::uint64_t base_seed) {
  RunRecord rec;
  rec.symbol = stock.symbol();
  rec.architecture = architecture;
  rec.assignment = assignment;
  rec.seed = derive_seed(base_seed, stock.symbol(), architecture, assignment.plan_row);
  try {
    const auto [train_part, test_part] = split_by_date(stock, split);
    rec.control = no_treatment_control(test_part);

    const MinMaxScale scale = fit_minmax(train_part, {0, train_part.size()});
    const WindowedDataset train_windows =
        make_windows(apply_scale(train_part, scale), assignment.window_length, assignment.hop);
    const WindowedDataset test_windows =
        make_windows(apply_scale(test_part, scale), assignment.window_length, assignment.hop);

    const ModelSpec spec{architecture, assignment.window_length, assignment.hidden_nodes, assignment.activation};
    const TrainConfig config{assignment.epochs, default_learning_rate(assignment.activation), rec.seed};
    const TrainedModel model = train(spec, config, train_windows);
    const Eigen::VectorXd predicted = predict(model, test_windows.inputs);
    rec.metrics = evaluate(test_windows.targets, predicted);
  } catch (const Error& e) {
    rec.status = "failed:" + std::string(errc_name(e.code()));
  }
  return rec;
}

void sort_records(std::vector<RunRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.symbol, a.architecture, a.assignment.plan_row) <
           std::tie(b.symbol, b.architecture, b.assignment.plan_row);
  });
}

std::vector<RunRecord> run_experiment(const std::vector<PriceSeries>& stocks, const SplitSpec& split,
                                      const std::vector<Architecture>& architectures,
                                      const std::vector<FactorAssignment>& plan, std::uint64_t base_seed,
                                      std::size_t jobs) {
  if (!split.valid()) throw Error(Errc::ConfigError, "split requires train_end < test_start <= test_end");
  struct Task {
    const PriceSeries* stock;
    Architecture arch;
    const FactorAssignment* assignment;
  };
  std::vector<Task> tasks;
  for (const auto& s : stocks)
    for (auto a : architectures)
      for (const auto& p : plan) tasks.push_back({&s, a, &p});

  std::vector<RunRecord> out(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      out[i] = run_single(*tasks[i].stock, split, tasks[i].arch, *tasks[i].assignment, base_seed);
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  sort_records(out);
  return out;
}

std::optional<Criterion> parse_criterion(std::string_view name) noexcept {
  if (name == "MAE" || name == "mae") return Criterion::MAE;
  if (name == "MSE" || name == "mse") return Criterion::MSE;
  if (name == "RMSE" || name == "rmse") return Criterion::RMSE;
  if (name == "R2" || name == "r2") return Criterion::R2;
  return std::nullopt;
}

namespace {

// Lower is better.
double score(const RunRecord& r, Criterion c) {
  switch (c) {
    case Criterion::MAE: return r.metrics.mae;
    case Criterion::MSE: return r.metrics.mse;
    case Criterion::RMSE: return r.metrics.rmse;
    case Criterion::R2: return -r.metrics.r_squared;
  }
  return r.metrics.mae;
}

bool better(const RunRecord& a, const RunRecord& b, Criterion c) {
  const double sa = score(a, c), sb = score(b, c);
  if (sa != sb) return sa < sb;
  return std::tie(a.architecture, a.assignment.plan_row, a.symbol) <
         std::tie(b.architecture, b.assignment.plan_row, b.symbol);
}

}  // namespace

std::vector<RunRecord> select_best_per_group(const std::vector<RunRecord>& records, GroupKey key,
                                             Criterion criterion) {
  std::map<std::string, const RunRecord*> symbol_best;
  std::map<Architecture, const RunRecord*> arch_best;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    const RunRecord*& slot = key == GroupKey::Stock ? symbol_best[r.symbol] : arch_best[r.architecture];
    if (slot == nullptr || better(r, *slot, criterion)) slot = &r;
  }
  std::vector<RunRecord> out;
  if (key == GroupKey::Stock)
    for (const auto& [k, r] : symbol_best) out.push_back(*r);
  else
    for (const auto& [k, r] : arch_best) out.push_back(*r);
  if (out.empty()) throw Error(Errc::EmptyGroup, "no successful runs to select from");
  return out;
}

std::vector<DivergenceCase> find_divergences(const std::vector<RunRecord>& records, double metric_gap_threshold) {
  std::vector<DivergenceCase> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].ok()) continue;
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (!records[j].ok()) continue;
      const Direction da = records[i].control.direction, db = records[j].control.direction;
      DivergenceCase c;
      c.record_a = i;
      c.record_b = j;
      c.metric_gap = std::abs(records[i].metrics.mae - records[j].metrics.mae);
      c.direction_conflict = (da == Direction::Up && db == Direction::Down) ||
                             (da == Direction::Down && db == Direction::Up);
      if (c.metric_gap <= metric_gap_threshold) {
        if (!c.direction_conflict) continue;
        c.kind = DivergenceKind::SmallGapConflict;
      } else {
        c.kind = DivergenceKind::LargeGap;
      }
      out.push_back(c);
    }
  }
  return out;
}

CorrelationMatrix correlate_metrics_with_direction(const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> ok;
  for (const auto& r : records)
    if (r.ok()) ok.push_back(&r);
  if (ok.size() < 3)
    throw Error(Errc::TooFewRecords, "correlation needs at least 3 successful runs, got " + std::to_string(ok.size()),
                ok.size());

  const auto n = static_cast<Eigen::Index>(ok.size());
  Eigen::Matrix<double, Eigen::Dynamic, 5> columns(n, 5);
  Eigen::VectorXd sign(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RunRecord& r = *ok[static_cast<std::size_t>(i)];
    columns.row(i) << r.metrics.mae, r.metrics.mse, r.metrics.rmse, r.metrics.r_squared, r.control.range_return;
    sign[i] = r.control.range_return > 0.0 ? 1.0 : (r.control.range_return < 0.0 ? -1.0 : 0.0);
  }

  CorrelationMatrix m;
  m.n = ok.size();
  for (int c = 0; c < 5; ++c)
    if (columns.col(c).maxCoeff() == columns.col(c).minCoeff())
      throw Error(Errc::ConstantColumn, std::string("column ") + kCorrelationLabels[c] + " is constant",
                  std::nullopt, kCorrelationLabels[c]);
  for (int i = 0; i < 5; ++i) {
    m.cells(i, i) = 1.0;
    for (int j = i + 1; j < 5; ++j) m.cells(i, j) = m.cells(j, i) = pearson(columns.col(i), columns.col(j)).rho;
  }
  if (sign.maxCoeff() != sign.minCoeff())
    for (int c = 0; c < 4; ++c) m.sign_srd[static_cast<std::size_t>(c)] = pearson(columns.col(c), sign).rho;
  return m;
}

std::optional<Pooling> parse_pooling(std::string_view text) noexcept {
  if (text == "best-per-stock") return Pooling::BestPerStock;
  if (text == "all-runs") return Pooling::AllRuns;
  return std::nullopt;
}

std::string_view pooling_tag(Pooling p) noexcept {
  return p == Pooling::BestPerStock ? "best-per-stock" : "all-runs";
}

std::vector<RunRecord> pool_records(const std::vector<RunRecord>& records, Pooling pooling) {
  if (pooling == Pooling::BestPerStock) return select_best_per_group(records, GroupKey::Stock, Criterion::MAE);
  std::vector<RunRecord> out;
  for (const auto& r : records)
    if (r.ok()) out.push_back(r);
  return out;
}

MirrorOutcome mirror_test(const TrainedModel& model, const MinMaxScale& scale, const PriceSeries& series, double c,
                          std::size_t hop) {
  std::vector<Observation> reflected = series.observations();
  for (auto& o : reflected) o.close = c - o.close;
  const PriceSeries mirror(series.symbol() + "_M", std::move(reflected), series.source());

  const std::size_t L = model.spec.window_length;
  auto raw_windows = [&](const PriceSeries& s) {
    NormalizedSeries raw;
    raw.symbol = s.symbol();
    raw.values = s.closes();
    return make_windows(raw, L, hop);
  };
  auto predict_raw = [&](const Eigen::MatrixXd& prices) {
    const Eigen::MatrixXd scaled = ((prices.array() - scale.min) / (scale.max - scale.min)).matrix();
    Eigen::VectorXd out = predict(model, scaled);
    for (auto& v : out) v = scale.denormalize(v);
    return out;
  };

  const WindowedDataset original = raw_windows(series);
  const WindowedDataset reflected_windows = raw_windows(mirror);

  MirrorOutcome out;
  out.predicted = predict_raw(original.inputs);
  out.mirrored_predicted = (c - predict_raw((c - reflected_windows.inputs.array()).matrix()).array()).matrix();
  out.original = evaluate(original.targets, out.predicted);
  out.mirrored = evaluate(reflected_windows.targets, out.mirrored_predicted);
  out.original_control = no_treatment_control(series);
  out.mirrored_control = no_treatment_control(mirror);

  auto inside = [c](const Eigen::VectorXd& v) {
    return v.size() == 0 || (v.minCoeff() >= c / 2 && v.maxCoeff() <= 2 * c);
  };
  out.exact_domain = inside(original.targets) && inside(out.predicted) && series.closes().minCoeff() >= c / 2 &&
                     series.closes().maxCoeff() < c;
  return out;
}

}  // namespace peval
