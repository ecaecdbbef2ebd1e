#include "peval/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "peval/harness.hpp"
#include "peval/ingest.hpp"
#include "peval/oed.hpp"
#include "peval/report.hpp"
#include "peval/synth.hpp"

namespace peval::cli {
namespace fs = std::filesystem;
namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<fs::path> csv_files(const fs::path& data) {
  if (fs::is_regular_file(data)) return {data};
  if (!fs::is_directory(data)) throw ConfigError("data path does not exist: " + data.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(data))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .csv files in " + data.string());
  return files;
}

std::vector<Architecture> parse_arch_list(const std::string& text) {
  std::vector<Architecture> out;
  std::stringstream ss(text);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    auto a = parse_architecture(tag);
    if (!a) throw ConfigError("unknown architecture '" + tag + "'");
    if (std::find(out.begin(), out.end(), *a) == out.end()) out.push_back(*a);
  }
  if (out.empty()) throw ConfigError("architecture list is empty");
  std::sort(out.begin(), out.end());
  return out;
}

ReportFormat parse_format(const std::string& text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "md") return ReportFormat::Markdown;
  throw ConfigError("format must be csv or md");
}

Pooling parse_pooling_or_throw(const std::string& text) {
  auto p = parse_pooling(text);
  if (!p) throw ConfigError("pooling must be best-per-stock or all-runs");
  return *p;
}

FactorTable factors_from(const std::string& path) {
  if (path.empty()) return FactorTable{};
  try {
    return load_factor_table(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
  std::string data;
  std::string out;
  double min_fit_r2 = kDefaultHurstMinFitR2;
};

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
  const auto files = csv_files(args.data);
  std::ostringstream table;
  table << "file,symbol,rows,integrity_ok,missing,nonpositive,duplicate_dates,hurst,hurst_fit_r2,screen,status\n";
  bool all_ok = true;
  for (const auto& file : files) {
    const std::string symbol = file.stem().string();
    table << file.filename().string() << ',' << symbol << ',';
    IntegrityReport integrity;
    {
      std::ifstream in(file);
      try {
        const auto raw = read_raw_records(in);
        integrity = verify_integrity(raw);
      } catch (const Error&) {
      }
    }
    try {
      const auto series = load_price_csv_file(file.string(), symbol);
      table << series.size() << ',' << (integrity.ok ? "true" : "false") << ',' << integrity.missing_value_count
            << ',' << integrity.nonpositive_price_count << ',' << integrity.duplicate_date_count << ',';
      try {
        const auto screen = screen_hurst(series, args.min_fit_r2);
        table << format_real(screen.estimate.exponent) << ',' << format_real(screen.estimate.r_squared) << ','
              << (screen.accepted ? "accepted" : "flagged") << ",ok\n";
      } catch (const Error& e) {
        all_ok = false;
        table << ",,,hurst:" << errc_name(e.code()) << '\n';
        err << file.string() << ": " << e.what() << '\n';
      }
    } catch (const Error& e) {
      all_ok = false;
      table << ",,,,,,,,failed:" << errc_name(e.code());
      if (e.index()) table << ":row " << *e.index();
      table << '\n';
      err << file.string() << ": " << e.what() << '\n';
    }
  }
  out << table.str();
  if (!args.out.empty()) {
    std::ofstream f(args.out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + args.out);
    f << table.str();
  }
  return all_ok ? kExitOk : kExitDataError;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string kind = "random_walk";
  std::size_t length = 200;
  double drift = 0.0;
  double noise = 1.0;
  std::uint64_t seed = 1;
  double start = 100.0;
  std::string symbol = "SYN";
  std::string out;
  bool battery = false;
  std::size_t mirrored_pairs = 0;
};

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  auto write_file = [&](const PriceSeries& s) {
    const fs::path path = fs::path(args.out) / (s.symbol() + ".csv");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    write_price_csv(f, s);
  };
  if (args.battery) {
    if (args.out.empty()) throw ConfigError("--battery requires --out <dir>");
    fs::create_directories(args.out);
    for (const auto& spec : acceptance_battery()) write_file(generate(spec).series);
    for (std::size_t k = 0; k < args.mirrored_pairs; ++k) {
      SynthSpec spec;
      spec.kind = SynthKind::MirroredPair;
      spec.length = 200;
      spec.seed = 100 + k;
      spec.symbol = "MP" + std::to_string(k + 1);
      const auto r = generate(spec);
      write_file(r.series);
      write_file(*r.mirror);
    }
    return kExitOk;
  }

  SynthSpec spec;
  auto kind = parse_synth_kind(args.kind);
  if (!kind) throw ConfigError("unknown synth kind '" + args.kind + "'");
  spec.kind = *kind;
  spec.length = args.length;
  spec.drift = args.drift;
  spec.noise_scale = args.noise;
  spec.seed = args.seed;
  spec.start_price = args.start;
  spec.symbol = args.symbol;
  SynthResult r = [&] {
    try {
      return generate(spec);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }();
  if (r.floored) err << "warning: prices were floored at " << kPriceFloor << '\n';
  if (args.out.empty()) {
    if (r.mirror) throw ConfigError("mirrored_pair requires --out <dir>");
    write_price_csv(out, r.series);
    return kExitOk;
  }
  fs::create_directories(args.out);
  write_file(r.series);
  if (r.mirror) write_file(*r.mirror);
  return kExitOk;
}

// ---------------------------------------------------------------- plan

int cmd_plan(const std::string& factors, const std::string& out_path, std::ostream& out) {
  const auto plan = generate_plan(factors_from(factors));
  if (out_path.empty()) {
    write_plan_csv(out, plan);
    return kExitOk;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + out_path);
  write_plan_csv(f, plan);
  return kExitOk;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string factors;
  std::string split;
  std::string arch = "mlp,rnn,lstm,gru,birnn,bilstm";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string pooling = "best-per-stock";
  std::string format = "csv";
  double threshold = 0.01;
};

// Keys: data, out, factors, split, arch, jobs, pooling, format, threshold.
// Relative paths resolve against the config file's directory.
void apply_config_file(ExperimentArgs& args, const CLI::App& app) {
  std::ifstream in(args.config);
  if (!in) throw ConfigError("cannot open config " + args.config);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  const fs::path base = fs::path(args.config).parent_path();
  auto given = [&](const char* flag) { return app.count(flag) > 0; };
  auto path_value = [&](const nlohmann::json& v) {
    fs::path p = v.get<std::string>();
    return (p.is_relative() ? base / p : p).string();
  };
  try {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      const std::string& key = it.key();
      const auto& v = it.value();
      if (key == "seed") throw ConfigError("seed must be given with --seed, not in the config file");
      if (key == "data") {
        if (!given("--data")) args.data = path_value(v);
      } else if (key == "out") {
        if (!given("--out")) args.out = path_value(v);
      } else if (key == "factors") {
        if (!given("--factors")) args.factors = path_value(v);
      } else if (key == "split") {
        if (!given("--split")) args.split = v.get<std::string>();
      } else if (key == "arch") {
        if (!given("--arch")) {
          if (v.is_array()) {
            std::string joined;
            for (const auto& a : v) joined += (joined.empty() ? "" : ",") + a.get<std::string>();
            args.arch = joined;
          } else {
            args.arch = v.get<std::string>();
          }
        }
      } else if (key == "jobs") {
        if (!given("--jobs")) args.jobs = v.get<std::size_t>();
      } else if (key == "pooling") {
        if (!given("--pooling")) args.pooling = v.get<std::string>();
      } else if (key == "format") {
        if (!given("--format")) args.format = v.get<std::string>();
      } else if (key == "threshold") {
        if (!given("--threshold")) args.threshold = v.get<double>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
}

int cmd_experiment(ExperimentArgs args, const CLI::App& app, std::ostream& out, std::ostream& err) {
  if (!args.config.empty()) apply_config_file(args, app);
  if (app.count("--seed") == 0) throw ConfigError("experiment requires --seed");
  if (args.data.empty()) throw ConfigError("experiment requires --data");
  if (args.out.empty()) throw ConfigError("experiment requires --out");
  if (args.split.empty()) throw ConfigError("experiment requires --split");

  SplitSpec split;
  try {
    split = parse_split(args.split);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const auto architectures = parse_arch_list(args.arch);
  const Pooling pooling = parse_pooling_or_throw(args.pooling);
  const ReportFormat format = parse_format(args.format);
  const FactorTable factors = factors_from(args.factors);
  if (!(args.threshold >= 0.0)) throw ConfigError("threshold must be non-negative");
  const auto files = csv_files(args.data);

  std::vector<PriceSeries> stocks;
  for (const auto& file : files) {
    try {
      stocks.push_back(load_price_csv_file(file.string(), file.stem().string()));
    } catch (const Error& e) {
      err << file.string() << ": " << e.what() << '\n';
      return kExitDataError;
    }
    if (!verify_integrity(stocks.back()).ok) {
      err << file.string() << ": integrity check failed\n";
      return kExitDataError;
    }
  }

  const auto plan = generate_plan(factors);
  auto records = run_experiment(stocks, split, architectures, plan, args.seed, args.jobs);
  ReportInputs inputs = analyze(std::move(records), pooling, args.threshold);
  inputs.base_seed = args.seed;
  emit_report(args.out, inputs, format);

  const auto failed = std::count_if(inputs.records.begin(), inputs.records.end(),
                                    [](const RunRecord& r) { return !r.ok(); });
  out << inputs.records.size() << " runs, " << failed << " failed; reports in " << args.out << '\n';
  if (!inputs.matrix) err << "correlation unavailable: " << inputs.correlation_error << '\n';
  return failed > 0 ? kExitPartialFailure : kExitOk;
}

// ---------------------------------------------------------------- correlate / report

int cmd_correlate(const std::string& data, const std::string& out_dir, const std::string& pooling_text,
                  std::ostream& out, std::ostream& err) {
  if (data.empty()) throw ConfigError("correlate requires --data <results.csv>");
  const Pooling pooling = parse_pooling_or_throw(pooling_text);
  std::vector<RunRecord> records;
  try {
    records = read_results_csv_file(data);
  } catch (const Error& e) {
    err << data << ": " << e.what() << '\n';
    return kExitDataError;
  }
  CorrelationMatrix matrix;
  try {
    matrix = correlate_metrics_with_direction(pool_records(records, pooling));
  } catch (const Error& e) {
    err << "correlation failed (" << errc_name(e.code()) << (e.label().empty() ? "" : ": " + e.label())
        << "): " << e.what() << '\n';
    return kExitDataError;
  }
  if (out_dir.empty()) {
    write_correlation_csv(out, matrix);
    write_correlation_notes(out, matrix);
    return kExitOk;
  }
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "correlation.csv", std::ios::binary);
  std::ofstream notes(fs::path(out_dir) / "correlation.txt", std::ios::binary);
  if (!csv || !notes) throw ConfigError("cannot write into " + out_dir);
  write_correlation_csv(csv, matrix);
  write_correlation_notes(notes, matrix);
  return kExitOk;
}

int cmd_report(const std::string& data, const std::string& out_dir, const std::string& pooling_text,
               const std::string& format_text, double threshold, std::ostream& err) {
  if (data.empty() || out_dir.empty()) throw ConfigError("report requires --data <results.csv> and --out <dir>");
  const Pooling pooling = parse_pooling_or_throw(pooling_text);
  const ReportFormat format = parse_format(format_text);
  std::vector<RunRecord> records;
  try {
    records = read_results_csv_file(data);
  } catch (const Error& e) {
    err << data << ": " << e.what() << '\n';
    return kExitDataError;
  }
  emit_report(out_dir, analyze(std::move(records), pooling, threshold), format);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forecast-evaluation harness: prediction error vs. price direction"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Integrity and Hurst report for price CSVs");
  ingest_cmd->add_option("--data", ingest.data, "CSV file or directory")->required();
  ingest_cmd->add_option("--out", ingest.out, "Also write the report as CSV");
  ingest_cmd->add_option("--min-fit-r2", ingest.min_fit_r2, "Hurst screen: minimum fit R^2");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic price series");
  synth_cmd->add_option("--kind", synth.kind, "random_walk|trending|mean_reverting|sine_plus_noise|mirrored_pair");
  synth_cmd->add_option("--length", synth.length);
  synth_cmd->add_option("--drift", synth.drift);
  synth_cmd->add_option("--noise", synth.noise);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--start", synth.start, "Starting price");
  synth_cmd->add_option("--symbol", synth.symbol);
  synth_cmd->add_option("--out", synth.out, "Output directory (stdout when omitted)");
  synth_cmd->add_flag("--battery", synth.battery, "Write the 24-series battery");
  synth_cmd->add_option("--mirrored-pairs", synth.mirrored_pairs, "Extra mirrored pairs with --battery");

  std::string plan_factors, plan_out;
  auto* plan_cmd = app.add_subcommand("plan", "Write the 16-row orthogonal experiment plan");
  plan_cmd->add_option("--factors", plan_factors, "Factor table JSON");
  plan_cmd->add_option("--out", plan_out, "Output CSV (stdout when omitted)");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the full training and evaluation pipeline");
  exp_cmd->add_option("--config", exp.config, "JSON config; flags override it");
  exp_cmd->add_option("--data", exp.data, "Directory of price CSVs");
  exp_cmd->add_option("--out", exp.out, "Output directory");
  exp_cmd->add_option("--factors", exp.factors, "Factor table JSON");
  exp_cmd->add_option("--split", exp.split, "train_end,test_start,test_end");
  exp_cmd->add_option("--arch", exp.arch, "Comma-separated architectures");
  exp_cmd->add_option("--seed", exp.seed, "Base seed (required)");
  exp_cmd->add_option("--jobs", exp.jobs, "Worker threads");
  exp_cmd->add_option("--pooling", exp.pooling, "best-per-stock|all-runs");
  exp_cmd->add_option("--format", exp.format, "csv|md");
  exp_cmd->add_option("--threshold", exp.threshold, "MAE gap threshold for divergences");

  std::string corr_data, corr_out, corr_pooling = "best-per-stock";
  auto* corr_cmd = app.add_subcommand("correlate", "Correlation matrix from a results CSV");
  corr_cmd->add_option("--data", corr_data, "results.csv")->required();
  corr_cmd->add_option("--out", corr_out, "Output directory (stdout when omitted)");
  corr_cmd->add_option("--pooling", corr_pooling, "best-per-stock|all-runs");

  std::string rep_data, rep_out, rep_pooling = "best-per-stock", rep_format = "csv";
  double rep_threshold = 0.01;
  auto* rep_cmd = app.add_subcommand("report", "Regenerate report files from a results CSV");
  rep_cmd->add_option("--data", rep_data, "results.csv")->required();
  rep_cmd->add_option("--out", rep_out, "Output directory")->required();
  rep_cmd->add_option("--pooling", rep_pooling, "best-per-stock|all-runs");
  rep_cmd->add_option("--format", rep_format, "csv|md");
  rep_cmd->add_option("--threshold", rep_threshold, "MAE gap threshold for divergences");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfigError;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out, err);
    if (*synth_cmd) return cmd_synth(synth, out, err);
    if (*plan_cmd) return cmd_plan(plan_factors, plan_out, out);
    if (*exp_cmd) return cmd_experiment(exp, *exp_cmd, out, err);
    if (*corr_cmd) return cmd_correlate(corr_data, corr_out, corr_pooling, out, err);
    if (*rep_cmd) return cmd_report(rep_data, rep_out, rep_pooling, rep_format, rep_threshold, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::ConfigError ? kExitConfigError : kExitDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace peval::cli
