#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tell {

enum class ErrorCode {
  MissingField,
  TypeMismatch,
  InvariantViolation,
  ParseError,
  DuplicateTypeId,
  UndeclaredPlaceholder,
  EmptyDb,
  ConstraintUnsatisfiable,
  OracleMismatch,
  EmptyPlot,
  LengthMismatch,
  NegativeRemainder,
  TieValues,
  MissingRow,
  ZeroTotal,
  MissingCategory,
  AmbiguousMode,
  ValidationError,
  NoTemplateFound,
  SchemaError,
  ProviderFailure,
  UnparseableReply,
  StructureError,
  EmptyText,
  IdMismatch,
  DuplicatePrediction,
  UnknownSampleId,
  IoError,
  InvalidArgument,
  Internal,
};

std::string_view error_code_name(ErrorCode code);

// All failures in the core surface as tell::Error. The code is stable and is
// what the C API maps to a status value; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  // Offending field or placeholder, when there is one.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace tell
