#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace peval {

enum class Errc {
  MissingColumn,
  MalformedRow,
  EmptySeries,
  InvalidSeries,
  DegenerateRange,
  TooShort,
  ZeroVariance,
  InsufficientData,
  EmptyPartition,
  ShapeMismatch,
  NonFiniteLoss,
  LengthMismatch,
  EmptyInput,
  ConstantActual,
  ConstantInput,
  OutOfRange,
  MalformedArray,
  IncompletePlan,
  EmptyGroup,
  ConstantColumn,
  TooFewRecords,
  IoFailure,
  BadSpec,
  ConfigError,
};

std::string_view errc_name(Errc code) noexcept;

// Thrown by every module. `index` carries the row number, epoch or
// position where one is meaningful; `label` names a column or file.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> index = std::nullopt,
        std::string label = {})
      : std::runtime_error(what), code_(code), index_(index), label_(std::move(label)) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }
  const std::string& label() const noexcept { return label_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
  std::string label_;
};

}  // namespace peval
