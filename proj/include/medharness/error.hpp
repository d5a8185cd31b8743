#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medharness {

enum class ErrorCode {
  // data and usage validation
  MalformedRow,
  UnknownLabel,
  DuplicateId,
  SchemaMismatch,
  EmptyInput,
  UnknownTemplate,
  UnknownLayout,
  InsufficientExemplars,
  UnknownSubject,
  NoOptions,
  IdMismatch,
  MultiLabelGold,
  MissingBaseline,
  DuplicateCheckpoint,
  InvalidConfig,
  // runtime
  Timeout,
  Connection,
  HttpStatus,
  MalformedResponse,
  AuthError,
  CacheIoError,
  CacheCollision,
  IoError,
  RunLocked,
  RunFailed,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by bad input or configuration, as opposed to
/// transport, filesystem, or service failures.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace medharness
