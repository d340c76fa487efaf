#include "dtsurv/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace dtsurv {

namespace {
std::atomic<bool> g_warnings_enabled{true};
std::atomic<std::size_t> g_warning_count{0};
std::mutex g_warn_mutex;
}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kArgument: return "argument";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kConvergence: return "convergence";
    case ErrorCode::kCalibration: return "calibration";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kDegenerateSupport: return "degenerate_support";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

void warn(const std::string& message) {
  ++g_warning_count;
  if (!g_warnings_enabled) return;
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled = enabled; }

std::size_t warning_count() { return g_warning_count; }

}  // namespace dtsurv
