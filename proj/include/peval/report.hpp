#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "peval/harness.hpp"

namespace peval {

inline constexpr const char* kResultsHeader =
    "symbol,architecture,plan_row,L,H,N,E,F,seed,mae,mse,rmse,r2,control_return,control_return_pct,direction,status";

// %.17g
std::string format_real(double value);

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records);
// Inverse of write_results_csv. Controls carry only range_return (read from
// the exact control_return column) and direction; start/end prices are not
// stored in the file.
std::vector<RunRecord> read_results_csv(std::istream& in);
std::vector<RunRecord> read_results_csv_file(const std::filesystem::path& path);

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& matrix);
void write_correlation_notes(std::ostream& out, const CorrelationMatrix& matrix);

enum class ReportFormat { Csv, Markdown };

struct ReportInputs {
  std::vector<RunRecord> records;            // every run
  std::vector<RunRecord> pooled;             // correlation / divergence population
  std::vector<DivergenceCase> divergences;   // indices into `pooled`
  std::optional<CorrelationMatrix> matrix;   // absent when correlation failed
  std::string correlation_error;
  Pooling pooling = Pooling::BestPerStock;
  double divergence_threshold = 0.01;
  std::optional<std::uint64_t> base_seed;
};

// Builds the analysis half of ReportInputs from run records.
ReportInputs analyze(std::vector<RunRecord> records, Pooling pooling, double divergence_threshold);

// Csv:      results.csv, divergences.csv, correlation.csv, correlation.txt, summary.txt
// Markdown: results.csv, report.md
// Output bytes depend only on the inputs.
void emit_report(const std::filesystem::path& dir, const ReportInputs& inputs, ReportFormat format);

}  // namespace peval
