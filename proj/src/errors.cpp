#include "hotspot/error.hpp"

namespace hotspot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownField: return "UnknownField";
    case ErrorCode::kDomainViolation: return "DomainViolation";
    case ErrorCode::kInvalidSchema: return "InvalidSchema";
    case ErrorCode::kHeaderMismatch: return "HeaderMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kSingleClassData: return "SingleClassData";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kColumnMismatch: return "ColumnMismatch";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kInvalidParams: return "InvalidParams";
    case ErrorCode::kBadModel: return "BadModel";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSingleClassLabels: return "SingleClassLabels";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kUnknownPreset: return "UnknownPreset";
  }
  return "Unknown";
}

}  // namespace hotspot
