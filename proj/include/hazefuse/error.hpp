#pragma once

#include <stdexcept>
#include <string>

namespace hazefuse {

enum class ErrorCode {
  // observation store
  DuplicateId,
  InvariantViolation,
  MalformedQuery,
  IoFailure,
  MalformedRecord,
  UnsupportedPhenomenon,
  // numerics / tables
  DomainError,
  OutOfRange,
  MalformedTable,
  NonMonotoneRow,
  // sky analysis
  DegenerateData,
  DimensionMismatch,
  UntrainedModel,
  LengthMismatch,
  // aod pipeline
  OutOfArea,
  TableRangeError,
  // ingestion
  MalformedDocument,
  RuleCompileError,
  CatalogUnreadable,
  // filter blobs
  DegenerateFit,
  UntrainedCurve,
  // fusion
  OutOfExtent,
  MixedPhenomena,
  TooFewPoints,
  InsufficientBins,
  SingularSystem,
};

const char* to_string(ErrorCode code);

/// Single exception type carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MalformedQuery: return "MalformedQuery";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::UnsupportedPhenomenon: return "UnsupportedPhenomenon";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::MalformedTable: return "MalformedTable";
    case ErrorCode::NonMonotoneRow: return "NonMonotoneRow";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::OutOfArea: return "OutOfArea";
    case ErrorCode::TableRangeError: return "TableRangeError";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::RuleCompileError: return "RuleCompileError";
    case ErrorCode::CatalogUnreadable: return "CatalogUnreadable";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::UntrainedCurve: return "UntrainedCurve";
    case ErrorCode::OutOfExtent: return "OutOfExtent";
    case ErrorCode::MixedPhenomena: return "MixedPhenomena";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InsufficientBins: return "InsufficientBins";
    case ErrorCode::SingularSystem: return "SingularSystem";
  }
  return "UnknownError";
}

}  // namespace hazefuse
