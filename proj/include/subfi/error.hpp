#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subfi {

enum class ErrorCode {
  InvalidMatrix,
  DimensionMismatch,
  InconsistentRankForms,
  InvalidModel,
  InvalidScenario,
  InvalidSubset,
  InvalidChannel,
  WindowTooLong,
  OutOfRange,
  NotPersistentlyExciting,
  OrderAmbiguous,
  HorizonTooShort,
  RankToleranceAmbiguous,
  TheoremMismatch,
  NotFound,
  NumericallyIllConditioned,
  ZeroSignalPower,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every library failure surfaces as this type; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace subfi
