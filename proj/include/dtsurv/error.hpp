#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dtsurv {

enum class ErrorCode {
  kSchema,
  kEmptyInput,
  kArgument,
  kTraining,
  kConvergence,
  kCalibration,
  kContract,
  kUndefinedMetric,
  kDegenerateSupport,
  kConfig,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this exception; `code()` is stable and
// machine-readable, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Warnings go to stderr unless silenced (tests silence them).
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);
std::size_t warning_count();

}  // namespace dtsurv
