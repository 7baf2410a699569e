#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tablerouter {

enum class ErrorCode {
  NoTableFound,
  MalformedHtml,
  NoJsonObject,
  MissingSlot,
  ModelUnavailable,
  ScriptExhausted,
  EmptyGroundTruth,
  MissingGold,
  FileUnreadable,
  EmptyManifest,
  InfeasibleConfig,
  OutOfBounds,
  SpanConflict,
  StaleVersion,
  NotFound,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Failures that abort an operation. Per-question execution failures are
// carried as values (ExecError) instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tablerouter
