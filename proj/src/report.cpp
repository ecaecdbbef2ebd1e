#include "peval/report.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace peval {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const char* kind_tag(DivergenceKind k) { return k == DivergenceKind::SmallGapConflict ? "small_gap_conflict" : "large_gap"; }

int sign_of(double r) { return r > 0.0 ? 1 : (r < 0.0 ? -1 : 0); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string(), std::nullopt, path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string(), std::nullopt, path.string());
}

void write_divergences_csv(std::ostream& out, const ReportInputs& in) {
  out << "kind,symbol_a,architecture_a,plan_row_a,mae_a,return_pct_a,direction_a,"
         "symbol_b,architecture_b,plan_row_b,mae_b,return_pct_b,direction_b,mae_gap,direction_conflict\n";
  for (const auto& d : in.divergences) {
    const RunRecord& a = in.pooled[d.record_a];
    const RunRecord& b = in.pooled[d.record_b];
    out << kind_tag(d.kind);
    for (const RunRecord* r : {&a, &b})
      out << ',' << r->symbol << ',' << architecture_tag(r->architecture) << ',' << r->assignment.plan_row << ','
          << format_real(r->metrics.mae) << ',' << format_real(r->control.range_return * 100.0) << ','
          << direction_tag(r->control.direction);
    out << ',' << format_real(d.metric_gap) << ',' << (d.direction_conflict ? "true" : "false") << '\n';
  }
}

void write_summary(std::ostream& out, const ReportInputs& in) {
  std::size_t ok = 0;
  std::map<std::string, std::size_t> failures;
  for (const auto& r : in.records) {
    if (r.ok())
      ++ok;
    else
      ++failures[r.status];
  }
  std::size_t conflicts = 0;
  for (const auto& d : in.divergences) conflicts += d.kind == DivergenceKind::SmallGapConflict;
  out << "runs: " << in.records.size() << '\n'
      << "ok: " << ok << '\n'
      << "failed: " << in.records.size() - ok << '\n';
  for (const auto& [tag, count] : failures) out << "  " << tag << ": " << count << '\n';
  out << "pooling: " << pooling_tag(in.pooling) << '\n'
      << "pooled_records: " << in.pooled.size() << '\n'
      << "divergence_threshold: " << format_real(in.divergence_threshold) << '\n'
      << "small_gap_conflicts: " << conflicts << '\n'
      << "large_gap_pairs: " << in.divergences.size() - conflicts << '\n';
  if (in.base_seed) out << "base_seed: " << *in.base_seed << '\n';
  out << "seed_derivation: " << kSeedDerivation << '\n'
      << "correlation: " << (in.matrix ? "ok" : in.correlation_error) << '\n';
}

void write_markdown(std::ostream& out, const ReportInputs& in) {
  out << "# Prediction error vs. return direction\n\n## Summary\n\n```\n";
  write_summary(out, in);
  out << "```\n\n## Runs\n\n"
      << "| symbol | architecture | plan_row | MAE | MSE | RMSE | R2 | control return % | direction | SRD sign | status |\n"
      << "|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : in.records) {
    out << "| " << r.symbol << " | " << architecture_tag(r.architecture) << " | " << r.assignment.plan_row << " | ";
    if (r.ok())
      out << fixed(r.metrics.mae) << " | " << fixed(r.metrics.mse) << " | " << fixed(r.metrics.rmse) << " | "
          << fixed(r.metrics.r_squared);
    else
      out << " | | | ";
    out << " | " << fixed(r.control.range_return * 100.0, 2) << " | " << direction_tag(r.control.direction) << " | "
        << sign_of(r.control.range_return) << " | " << r.status << " |\n";
  }

  out << "\n## Divergences\n\n"
      << "| kind | a | MAE a | return % a | b | MAE b | return % b | MAE gap | conflict |\n"
      << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& d : in.divergences) {
    const RunRecord& a = in.pooled[d.record_a];
    const RunRecord& b = in.pooled[d.record_b];
    auto name = [](const RunRecord& r) {
      return r.symbol + "/" + std::string(architecture_tag(r.architecture)) + "#" +
             std::to_string(r.assignment.plan_row);
    };
    out << "| " << kind_tag(d.kind) << " | " << name(a) << " | " << fixed(a.metrics.mae) << " | "
        << fixed(a.control.range_return * 100.0, 2) << " | " << name(b) << " | " << fixed(b.metrics.mae) << " | "
        << fixed(b.control.range_return * 100.0, 2) << " | " << fixed(d.metric_gap) << " | "
        << (d.direction_conflict ? "yes" : "no") << " |\n";
  }

  out << "\n## Correlation\n\n";
  if (!in.matrix) {
    out << "Not available: " << in.correlation_error << "\n";
    return;
  }
  const auto& m = *in.matrix;
  out << "| |";
  for (const auto& l : m.labels) out << ' ' << l << " |";
  out << "\n|---|---|---|---|---|---|\n";
  for (int i = 0; i < 5; ++i) {
    out << "| " << m.labels[static_cast<std::size_t>(i)] << " |";
    for (int j = 0; j < 5; ++j) out << ' ' << fixed(m.cells(i, j)) << " |";
    out << '\n';
  }
  out << "\n```\n";
  write_correlation_notes(out, m);
  out << "```\n";
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kResultsHeader << '\n';
  for (const auto& r : records) {
    const auto& a = r.assignment;
    out << r.symbol << ',' << architecture_tag(r.architecture) << ',' << a.plan_row << ',' << a.window_length << ','
        << a.hop << ',' << a.hidden_nodes << ',' << a.epochs << ',' << activation_tag(a.activation) << ',' << r.seed
        << ',';
    if (r.ok())
      out << format_real(r.metrics.mae) << ',' << format_real(r.metrics.mse) << ',' << format_real(r.metrics.rmse)
          << ',' << format_real(r.metrics.r_squared);
    else
      out << ",,,";
    out << ',' << format_real(r.control.range_return) << ',' << format_real(r.control.range_return * 100.0) << ','
        << direction_tag(r.control.direction) << ','
        << r.status << '\n';
  }
}

std::vector<RunRecord> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MissingColumn, "results file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw Error(Errc::MissingColumn, "results header does not match the expected columns");

  std::vector<RunRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    auto bad = [&](const std::string& what) {
      return Error(Errc::MalformedRow, "results row " + std::to_string(line_no) + ": " + what, line_no);
    };
    if (f.size() != 17) throw bad("expected 17 fields");
    try {
      RunRecord r;
      r.symbol = f[0];
      auto arch = parse_architecture(f[1]);
      auto activation = parse_activation(f[7]);
      if (!arch || !activation) throw bad("unknown architecture or activation");
      r.architecture = *arch;
      r.assignment.plan_row = std::stoul(f[2]);
      r.assignment.window_length = std::stoul(f[3]);
      r.assignment.hop = std::stoul(f[4]);
      r.assignment.hidden_nodes = std::stoul(f[5]);
      r.assignment.epochs = std::stoul(f[6]);
      r.assignment.activation = *activation;
      r.seed = std::stoull(f[8]);
      r.status = f[16];
      if (r.ok()) {
        r.metrics.mae = std::stod(f[9]);
        r.metrics.mse = std::stod(f[10]);
        r.metrics.rmse = std::stod(f[11]);
        r.metrics.r_squared = std::stod(f[12]);
      }
      r.control.range_return = std::stod(f[13]);
      r.control.direction = direction_of(r.control.range_return);
      if (f[15] != direction_tag(r.control.direction)) throw bad("direction disagrees with control_return");
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw bad("unparseable field");
    }
  }
  return out;
}

std::vector<RunRecord> read_results_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string(), std::nullopt, path.string());
  return read_results_csv(in);
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "label";
  for (const auto& l : m.labels) out << ',' << l;
  out << '\n';
  for (int i = 0; i < 5; ++i) {
    out << m.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < 5; ++j) out << ',' << format_real(m.cells(i, j));
    out << '\n';
  }
}

void write_correlation_notes(std::ostream& out, const CorrelationMatrix& m) {
  out << "records: " << m.n << '\n';
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      out << m.labels[static_cast<std::size_t>(i)] << " ~ " << m.labels[static_cast<std::size_t>(j)]
          << ": rho = " << fixed(m.cells(i, j)) << " (" << m.interpretation(i, j) << ")\n";
  out << "direction sign (+1 up, -1 down, 0 flat):\n";
  for (int c = 0; c < 4; ++c) {
    const auto& v = m.sign_srd[static_cast<std::size_t>(c)];
    out << "  " << m.labels[static_cast<std::size_t>(c)] << " ~ sign(SRD): ";
    if (v)
      out << "rho = " << fixed(*v) << " (" << interpret_correlation(*v) << ")\n";
    else
      out << "undefined (constant sign)\n";
  }
}

ReportInputs analyze(std::vector<RunRecord> records, Pooling pooling, double divergence_threshold) {
  ReportInputs in;
  sort_records(records);
  in.records = std::move(records);
  in.pooling = pooling;
  in.divergence_threshold = divergence_threshold;
  try {
    in.pooled = pool_records(in.records, pooling);
  } catch (const Error& e) {
    in.correlation_error = e.what();
    return in;
  }
  in.divergences = find_divergences(in.pooled, divergence_threshold);
  try {
    in.matrix = correlate_metrics_with_direction(in.pooled);
  } catch (const Error& e) {
    in.correlation_error = e.what();
  }
  return in;
}

void emit_report(const std::filesystem::path& dir, const ReportInputs& in, ReportFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string(), std::nullopt, dir.string());

  auto write = [&](const char* name, auto&& body) {
    const auto path = dir / name;
    auto out = open_out(path);
    body(out);
    finish(out, path);
  };
  write("results.csv", [&](std::ostream& o) { write_results_csv(o, in.records); });
  if (format == ReportFormat::Markdown) {
    write("report.md", [&](std::ostream& o) { write_markdown(o, in); });
    return;
  }
  write("divergences.csv", [&](std::ostream& o) { write_divergences_csv(o, in); });
  write("summary.txt", [&](std::ostream& o) { write_summary(o, in); });
  if (in.matrix) {
    write("correlation.csv", [&](std::ostream& o) { write_correlation_csv(o, *in.matrix); });
    write("correlation.txt", [&](std::ostream& o) { write_correlation_notes(o, *in.matrix); });
  }
}

}  // namespace peval
