#include "core/error.hpp"

namespace tell {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateTypeId: return "DuplicateTypeId";
    case ErrorCode::UndeclaredPlaceholder: return "UndeclaredPlaceholder";
    case ErrorCode::EmptyDb: return "EmptyDb";
    case ErrorCode::ConstraintUnsatisfiable: return "ConstraintUnsatisfiable";
    case ErrorCode::OracleMismatch: return "OracleMismatch";
    case ErrorCode::EmptyPlot: return "EmptyPlot";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeRemainder: return "NegativeRemainder";
    case ErrorCode::TieValues: return "TieValues";
    case ErrorCode::MissingRow: return "MissingRow";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::MissingCategory: return "MissingCategory";
    case ErrorCode::AmbiguousMode: return "AmbiguousMode";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::NoTemplateFound: return "NoTemplateFound";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::UnparseableReply: return "UnparseableReply";
    case ErrorCode::StructureError: return "StructureError";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::DuplicatePrediction: return "DuplicatePrediction";
    case ErrorCode::UnknownSampleId: return "UnknownSampleId";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

}  // namespace tell
