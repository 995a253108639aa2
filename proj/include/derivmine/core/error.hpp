#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace derivmine {

// Every failure the pipeline can report by name. The names returned by
// errc_name() are part of the external contract (HTTP error bodies, CLI
// output, transcript error codes).
enum class Errc {
  EmptyBundle,
  DuplicateId,
  MalformedMetadata,
  UnknownPaper,
  UnbalancedEnvironment,
  ExhaustedRetries,
  PayloadTooLarge,
  SchemaViolation,
  ParseFailed,
  ProviderError,
  SelfContainmentFailed,
  OverFiltered,
  PaperNotAccepted,
  Cancelled,
  UnknownSample,
  QueueEmpty,
  VersionConflict,
  RubricViolation,
  InvalidDecision,
  NotReviewable,
  NothingAccepted,
  UnknownExport,
  GradeOutOfRange,
  RangeError,
  NoScores,
  UsageError,
  ConfigError,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

}  // namespace derivmine
