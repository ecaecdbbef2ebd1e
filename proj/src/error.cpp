#include "peval/error.hpp"

namespace peval {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "missing_column";
    case Errc::MalformedRow: return "malformed_row";
    case Errc::EmptySeries: return "empty_series";
    case Errc::InvalidSeries: return "invalid_series";
    case Errc::DegenerateRange: return "degenerate_range";
    case Errc::TooShort: return "too_short";
    case Errc::ZeroVariance: return "zero_variance";
    case Errc::InsufficientData: return "insufficient_data";
    case Errc::EmptyPartition: return "empty_partition";
    case Errc::ShapeMismatch: return "shape_mismatch";
    case Errc::NonFiniteLoss: return "non_finite_loss";
    case Errc::LengthMismatch: return "length_mismatch";
    case Errc::EmptyInput: return "empty_input";
    case Errc::ConstantActual: return "constant_actual";
    case Errc::ConstantInput: return "constant_input";
    case Errc::OutOfRange: return "out_of_range";
    case Errc::MalformedArray: return "malformed_array";
    case Errc::IncompletePlan: return "incomplete_plan";
    case Errc::EmptyGroup: return "empty_group";
    case Errc::ConstantColumn: return "constant_column";
    case Errc::TooFewRecords: return "too_few_records";
    case Errc::IoFailure: return "io_failure";
    case Errc::BadSpec: return "bad_spec";
    case Errc::ConfigError: return "config_error";
  }
  return "unknown";
}

}  // namespace peval
