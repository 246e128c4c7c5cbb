#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hotspot {

enum class ErrorCode {
  // schema
  kUnknownField,
  kDomainViolation,
  kInvalidSchema,
  // ingest
  kHeaderMismatch,
  kIoError,
  // featurize
  kTooShort,
  kMissingLabel,
  // gbdt
  kSingleClassData,
  kNonFiniteInput,
  kColumnMismatch,
  kDegenerateSplit,
  kInvalidParams,
  kBadModel,
  // metrics
  kLengthMismatch,
  kSingleClassLabels,
  kNoPositives,
  // synth / cli
  kInvalidConfig,
  kUnknownPreset,
};

std::string_view to_string(ErrorCode code);

/// Every library failure is reported through this type; `code()` lets the
/// command layer map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hotspot
