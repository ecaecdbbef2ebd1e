#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oracle.hpp"
#include "peval/harness.hpp"
#include "peval/report.hpp"
#include "peval/synth.hpp"

using namespace peval;
namespace fs = std::filesystem;

namespace {

RunRecord make_record(std::string symbol, Architecture arch, double mae, double mse, double rmse, double r2,
                      double return_pct, std::size_t plan_row = 0) {
  RunRecord r;
  r.symbol = std::move(symbol);
  r.architecture = arch;
  r.assignment.plan_row = plan_row;
  r.metrics = {mae, mse, rmse, r2, 10};
  r.control.range_return = return_pct / 100.0;
  r.control.direction = direction_of(r.control.range_return);
  return r;
}

FactorTable quick_table() {
  FactorTable t;
  t.window_lengths = {3, 4, 5, 6};
  t.hidden_nodes = {2, 3, 4, 5};
  t.epochs = {1, 2, 3, 4};
  return t;
}

PriceSeries synthetic(const std::string& symbol, std::uint64_t seed, double drift, std::size_t length = 80) {
  SynthSpec spec;
  spec.kind = SynthKind::Trending;
  spec.length = length;
  spec.seed = seed;
  spec.drift = drift;
  spec.symbol = symbol;
  return generate(spec).series;
}

// Split over the business days produced by synth: first 60 train, rest test.
SplitSpec split_for(const PriceSeries& s, std::size_t train = 60) {
  return {s.date(train - 1), s.date(train), s.date(s.size() - 1)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("peval_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("seed derivation is a pure function of its inputs") {
  const auto s = derive_seed(42, "AAPL", Architecture::LSTM, 3);
  CHECK(s == derive_seed(42, "AAPL", Architecture::LSTM, 3));
  CHECK(s != derive_seed(43, "AAPL", Architecture::LSTM, 3));
  CHECK(s != derive_seed(42, "AAPM", Architecture::LSTM, 3));
  CHECK(s != derive_seed(42, "AAPL", Architecture::GRU, 3));
  CHECK(s != derive_seed(42, "AAPL", Architecture::LSTM, 4));
  // reference values of the building blocks
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  const auto mix = [](std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ v); };
  CHECK(s == mix(mix(mix(splitmix64(42), fnv1a64("AAPL")), fnv1a64("lstm")), 3));
}

TEST_CASE("controls") {
  auto series = [](double first, double last) {
    using namespace std::chrono;
    const Date d0 = year{2017} / January / day{10};
    return PriceSeries("C", {{d0, first}, {year_month_day{sys_days{d0} + days{1}}, (first + last) / 2}, {year_month_day{sys_days{d0} + days{2}}, last}});
  };
  const auto down = no_treatment_control(series(100.0, 71.39));
  CHECK(down.range_return * 100 == doctest::Approx(-28.61).epsilon(1e-12));
  CHECK(down.direction == Direction::Down);
  const auto up = no_treatment_control(series(100.0, 128.17));
  CHECK(up.range_return * 100 == doctest::Approx(28.17).epsilon(1e-12));
  CHECK(up.direction == Direction::Up);
  CHECK(no_treatment_control(series(50.0, 50.0)).direction == Direction::Flat);
}

TEST_CASE("run_experiment covers every combination") {
  const auto stock = synthetic("S1", 3, 0.2);
  const auto plan = generate_plan(quick_table());
  const std::vector<Architecture> archs(std::begin(kAllArchitectures), std::end(kAllArchitectures));
  const auto records = run_experiment({stock}, split_for(stock), archs, plan, 7, 1);
  REQUIRE(records.size() == 96);
  std::set<std::pair<Architecture, std::size_t>> seen;
  for (const auto& r : records) {
    CHECK(r.ok());
    seen.insert({r.architecture, r.assignment.plan_row});
    // control is model independent
    CHECK(r.control.range_return == records.front().control.range_return);
    CHECK(r.seed == derive_seed(7, "S1", r.architecture, r.assignment.plan_row));
  }
  CHECK(seen.size() == 96);

  const auto again = run_experiment({stock}, split_for(stock), archs, plan, 7, 3);
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(again[i].symbol == records[i].symbol);
    CHECK(again[i].architecture == records[i].architecture);
    CHECK(again[i].assignment.plan_row == records[i].assignment.plan_row);
    CHECK(again[i].metrics.mae == records[i].metrics.mae);
    CHECK(again[i].metrics.r_squared == records[i].metrics.r_squared);
  }
}

TEST_CASE("subsets reproduce the same records") {
  const auto a = synthetic("A", 1, 0.1), b = synthetic("B", 2, -0.1);
  const auto plan = generate_plan(quick_table());
  const auto full = run_experiment({a, b}, split_for(a), {Architecture::MLP, Architecture::GRU}, plan, 11, 2);
  const std::vector<FactorAssignment> rows{plan[5], plan[9]};
  const auto part = run_experiment({b}, split_for(a), {Architecture::GRU}, rows, 11, 1);
  REQUIRE(part.size() == 2);
  for (const auto& r : part) {
    bool found = false;
    for (const auto& f : full)
      if (f.symbol == r.symbol && f.architecture == r.architecture && f.assignment.plan_row == r.assignment.plan_row) {
        found = true;
        CHECK(f.metrics.mae == r.metrics.mae);
        CHECK(f.metrics.mse == r.metrics.mse);
        CHECK(f.control.range_return == r.control.range_return);
      }
    CHECK(found);
  }
}

TEST_CASE("failed runs are recorded, not thrown") {
  const auto stock = synthetic("SHORT", 4, 0.0, 80);
  FactorTable t = quick_table();
  t.window_lengths = {3, 4, 5, 20};
  const auto records = run_experiment({stock}, split_for(stock), {Architecture::MLP}, generate_plan(t), 1, 1);
  std::size_t failed = 0;
  for (const auto& r : records)
    if (!r.ok()) {
      ++failed;
      CHECK(r.status == "failed:insufficient_data");
    }
  CHECK(failed == 4);
}

TEST_CASE("selection on the published per-network comparison") {
  std::vector<RunRecord> records;
  const Architecture order[] = {Architecture::MLP, Architecture::RNN, Architecture::LSTM,
                                Architecture::GRU, Architecture::BiRNN, Architecture::BiLSTM};
  const double s600275[6][4] = {{0.0329, 0.0017, 0.0407, 0.9604}, {0.0166, 0.0006, 0.0237, 0.9866},
                                {0.0170, 0.0005, 0.0240, 0.9862}, {0.0239, 0.0010, 0.0310, 0.9769},
                                {0.0267, 0.0012, 0.0340, 0.9722}, {0.0278, 0.0012, 0.0353, 0.9702}};
  const double amzn[6][4] = {{0.0172, 0.0005, 0.0217, 0.9591}, {0.0118, 0.0002, 0.0157, 0.9785},
                             {0.0115, 0.0001, 0.0154, 0.9794}, {0.0143, 0.0003, 0.0183, 0.9708},
                             {0.0167, 0.0005, 0.0218, 0.9588}, {0.0150, 0.0004, 0.0201, 0.9647}};
  for (int i = 0; i < 6; ++i) {
    records.push_back(make_record("600275", order[i], s600275[i][0], s600275[i][1], s600275[i][2], s600275[i][3], -59.49));
    records.push_back(make_record("AMZN", order[i], amzn[i][0], amzn[i][1], amzn[i][2], amzn[i][3], 20.0));
  }
  const auto best = select_best_per_group(records, GroupKey::Stock, Criterion::MAE);
  REQUIRE(best.size() == 2);
  CHECK(best[0].symbol == "600275");
  CHECK(best[0].architecture == Architecture::RNN);
  CHECK(best[1].symbol == "AMZN");
  CHECK(best[1].architecture == Architecture::LSTM);

  CHECK(select_best_per_group(records, GroupKey::Stock, Criterion::R2)[0].architecture == Architecture::RNN);
  CHECK(select_best_per_group(records, GroupKey::Stock, Criterion::MSE)[0].architecture == Architecture::LSTM);
}

TEST_CASE("selection tie rules and dominance") {
  std::vector<RunRecord> records{make_record("X", Architecture::GRU, 0.02, 0.001, 0.03, 0.9, 1, 7),
                                 make_record("X", Architecture::GRU, 0.02, 0.001, 0.03, 0.9, 1, 2),
                                 make_record("X", Architecture::MLP, 0.05, 0.004, 0.06, 0.5, 1, 0)};
  const auto best = select_best_per_group(records, GroupKey::Stock, Criterion::MAE);
  REQUIRE(best.size() == 1);
  CHECK(best[0].assignment.plan_row == 2);

  records.push_back(make_record("X", Architecture::LSTM, 0.02, 0.001, 0.03, 0.9, 1, 0));
  CHECK(select_best_per_group(records, GroupKey::Stock, Criterion::MAE)[0].architecture == Architecture::LSTM);

  std::vector<RunRecord> dominant{make_record("A", Architecture::BiLSTM, 0.01, 0.0001, 0.01, 0.99, 1),
                                  make_record("A", Architecture::MLP, 0.02, 0.0004, 0.02, 0.9, 1),
                                  make_record("A", Architecture::RNN, 0.03, 0.0009, 0.03, 0.8, 1)};
  for (auto c : {Criterion::MAE, Criterion::MSE, Criterion::RMSE, Criterion::R2})
    CHECK(select_best_per_group(dominant, GroupKey::Stock, c)[0].architecture == Architecture::BiLSTM);
  const auto by_arch = select_best_per_group(dominant, GroupKey::Architecture, Criterion::MAE);
  CHECK(by_arch.size() == 3);
  CHECK(by_arch[0].architecture == Architecture::MLP);

  std::vector<RunRecord> failed{make_record("A", Architecture::MLP, 0.1, 0.1, 0.1, 0.1, 1)};
  failed[0].status = "failed:non_finite_loss";
  CHECK_THROWS_AS(select_best_per_group(failed, GroupKey::Stock, Criterion::MAE), Error);
}

TEST_CASE("divergences on the published small-gap pair") {
  const std::vector<RunRecord> pair{make_record("MSFT", Architecture::BiLSTM, 0.0174, 0.0006, 0.0242, 0.9355, 14.60),
                                    make_record("600171", Architecture::BiLSTM, 0.0228, 0.0010, 0.0323, 0.9651, -34.43)};
  const auto cases = find_divergences(pair, 0.01);
  REQUIRE(cases.size() == 1);
  CHECK(cases[0].record_a == 0);
  CHECK(cases[0].record_b == 1);
  CHECK(cases[0].direction_conflict);
  CHECK(cases[0].kind == DivergenceKind::SmallGapConflict);
  CHECK(cases[0].metric_gap == doctest::Approx(0.0054).epsilon(1e-9));

  const std::vector<RunRecord> same{make_record("MCD", Architecture::BiLSTM, 0.0216, 0.001, 0.0324, 0.9767, 27.85),
                                    make_record("600519", Architecture::BiLSTM, 0.0207, 0.0007, 0.0255, 0.959, 28.17),
                                    make_record("AAPL", Architecture::BiLSTM, 0.0240, 0.001, 0.0323, 0.9582, 30.51)};
  std::size_t conflicts = 0;
  for (const auto& c : find_divergences(same, 0.01)) conflicts += c.direction_conflict;
  CHECK(conflicts == 0);

  const auto large = find_divergences(pair, 0.001);
  REQUIRE(large.size() == 1);
  CHECK(large[0].kind == DivergenceKind::LargeGap);
  CHECK(large[0].direction_conflict);
}

TEST_CASE("mirror test is exact on seeded series") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.length = 120;
    spec.start_price = 384.0;
    const PriceSeries s = generate(spec).series;
    const MinMaxScale scale = fit_minmax(s, {0, s.size()});
    const WindowedDataset w = make_windows(apply_scale(s, scale), 5, 0);
    const ModelSpec ms{Architecture::MLP, 5, 4, Activation::Tanh};
    const TrainedModel model = train(ms, {30, 0.05, seed}, w);
    const auto out = mirror_test(model, scale, s, 512.0, 0);
    REQUIRE(out.exact_domain);
    CHECK(out.mirrored.mae == out.original.mae);
    CHECK(out.mirrored.mse == out.original.mse);
    CHECK(out.mirrored.rmse == out.original.rmse);
    if (out.original_control.direction == Direction::Up) CHECK(out.mirrored_control.direction == Direction::Down);
    if (out.original_control.direction == Direction::Down) CHECK(out.mirrored_control.direction == Direction::Up);

    RunRecord a, b;
    a.metrics = out.original;
    a.control = out.original_control;
    b.metrics = out.mirrored;
    b.control = out.mirrored_control;
    const auto cases = find_divergences({a, b}, 0.0);
    if (out.original_control.direction != Direction::Flat) {
      REQUIRE(cases.size() == 1);
      CHECK(cases[0].metric_gap == 0.0);
      CHECK(cases[0].direction_conflict);
    }
  }
}

TEST_CASE("correlation matrix structure and values") {
  std::mt19937_64 rng(19);
  std::vector<RunRecord> records;
  for (int i = 0; i < 12; ++i) {
    const double mae = 0.01 + 0.04 * unit_uniform(rng);
    const double mse = mae * mae * (1.2 + unit_uniform(rng));
    records.push_back(make_record("S" + std::to_string(i), Architecture::MLP, mae, mse, std::sqrt(mse),
                                  0.9 - unit_uniform(rng) * 0.2, 60.0 * unit_uniform(rng) - 30.0));
  }
  const auto m = correlate_metrics_with_direction(records);
  CHECK(m.n == 12);
  for (int i = 0; i < 5; ++i) {
    CHECK(m.cells(i, i) == 1.0);
    for (int j = 0; j < 5; ++j) {
      CHECK(m.cells(i, j) == m.cells(j, i));
      CHECK(std::abs(m.cells(i, j)) <= 1.0);
    }
  }
  std::vector<double> mae, srd;
  for (const auto& r : records) {
    mae.push_back(r.metrics.mae);
    srd.push_back(r.control.range_return);
  }
  CHECK(std::abs(m.cells(0, 4) - oracle::pearson(mae, srd)) <= 1e-12);
  CHECK(m.cells(1, 2) > 0.9);
  CHECK(m.labels[4] == "SRD");

  auto flat = records;
  for (auto& r : flat) r.control.range_return = 0.1;
  try {
    correlate_metrics_with_direction(flat);
    FAIL("expected ConstantColumn");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConstantColumn);
    CHECK(e.label() == "SRD");
  }
  CHECK_THROWS_AS(correlate_metrics_with_direction({records[0], records[1]}), Error);
}

TEST_CASE("pooling") {
  std::vector<RunRecord> records{make_record("A", Architecture::MLP, 0.02, 0.001, 0.03, 0.9, 5, 0),
                                 make_record("A", Architecture::LSTM, 0.01, 0.001, 0.03, 0.9, 5, 1),
                                 make_record("B", Architecture::MLP, 0.03, 0.001, 0.03, 0.9, -5, 0)};
  records.push_back(records.back());
  records.back().status = "failed:too_short";
  CHECK(pool_records(records, Pooling::AllRuns).size() == 3);
  const auto best = pool_records(records, Pooling::BestPerStock);
  REQUIRE(best.size() == 2);
  CHECK(best[0].architecture == Architecture::LSTM);
  CHECK(parse_pooling("all-runs") == Pooling::AllRuns);
  CHECK(pooling_tag(Pooling::BestPerStock) == "best-per-stock");
}

TEST_CASE("results csv round-trip and byte-identical reports") {
  const auto a = synthetic("A", 1, 0.3), b = synthetic("B", 2, -0.3), c = synthetic("C", 5, 0.05);
  const auto records =
      run_experiment({a, b, c}, split_for(a), {Architecture::MLP, Architecture::RNN}, generate_plan(quick_table()), 3, 2);

  std::stringstream buf;
  write_results_csv(buf, records);
  const std::string text = buf.str();
  CHECK(text.rfind(std::string(kResultsHeader) + "\n", 0) == 0);
  const auto back = read_results_csv(buf);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].metrics.mae == records[i].metrics.mae);
    CHECK(back[i].metrics.r_squared == records[i].metrics.r_squared);
    CHECK(back[i].control.direction == records[i].control.direction);
    CHECK(back[i].seed == records[i].seed);
    CHECK(back[i].assignment.activation == records[i].assignment.activation);
  }

  for (auto format : {ReportFormat::Csv, ReportFormat::Markdown}) {
    const fs::path d1 = scratch("r1"), d2 = scratch("r2");
    emit_report(d1, analyze(records, Pooling::AllRuns, 0.01), format);
    emit_report(d2, analyze(records, Pooling::AllRuns, 0.01), format);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
      ++files;
      CHECK(slurp(entry.path()) == slurp(d2 / entry.path().filename()));
    }
    CHECK(files == (format == ReportFormat::Csv ? 5u : 2u));
  }

  const fs::path d = scratch("empty_div");
  ReportInputs in = analyze(records, Pooling::BestPerStock, 0.01);
  in.divergences.clear();
  emit_report(d, in, ReportFormat::Csv);
  const std::string div = slurp(d / "divergences.csv");
  CHECK(std::count(div.begin(), div.end(), '\n') == 1);
}

TEST_CASE("correlation notes render bands") {
  CorrelationMatrix m;
  m.cells(0, 2) = m.cells(2, 0) = 0.8753;
  std::ostringstream out;
  write_correlation_notes(out, m);
  CHECK(out.str().find("High positive") != std::string::npos);
  std::ostringstream csv;
  write_correlation_csv(csv, m);
  CHECK(csv.str().rfind("label,MAE,MSE,RMSE,R2,SRD\n", 0) == 0);
}
