#include "medharness/error.hpp"

namespace medharness {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::UnknownLayout: return "UnknownLayout";
    case ErrorCode::InsufficientExemplars: return "InsufficientExemplars";
    case ErrorCode::UnknownSubject: return "UnknownSubject";
    case ErrorCode::NoOptions: return "NoOptions";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::MultiLabelGold: return "MultiLabelGold";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::DuplicateCheckpoint: return "DuplicateCheckpoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::Connection: return "Connection";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::CacheIoError: return "CacheIoError";
    case ErrorCode::CacheCollision: return "CacheCollision";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::RunLocked: return "RunLocked";
    case ErrorCode::RunFailed: return "RunFailed";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Timeout:
    case ErrorCode::Connection:
    case ErrorCode::HttpStatus:
    case ErrorCode::MalformedResponse:
    case ErrorCode::AuthError:
    case ErrorCode::CacheIoError:
    case ErrorCode::CacheCollision:
    case ErrorCode::IoError:
    case ErrorCode::RunLocked:
    case ErrorCode::RunFailed:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace medharness
