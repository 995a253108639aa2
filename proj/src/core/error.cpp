#include "derivmine/core/error.hpp"

namespace derivmine {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyBundle: return "EmptyBundle";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::MalformedMetadata: return "MalformedMetadata";
    case Errc::UnknownPaper: return "UnknownPaper";
    case Errc::UnbalancedEnvironment: return "UnbalancedEnvironment";
    case Errc::ExhaustedRetries: return "ExhaustedRetries";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::ParseFailed: return "parse_failed";
    case Errc::ProviderError: return "provider_error";
    case Errc::SelfContainmentFailed: return "SelfContainmentFailed";
    case Errc::OverFiltered: return "OverFiltered";
    case Errc::PaperNotAccepted: return "PaperNotAccepted";
    case Errc::Cancelled: return "Cancelled";
    case Errc::UnknownSample: return "UnknownSample";
    case Errc::QueueEmpty: return "QueueEmpty";
    case Errc::VersionConflict: return "VersionConflict";
    case Errc::RubricViolation: return "RubricViolation";
    case Errc::InvalidDecision: return "InvalidDecision";
    case Errc::NotReviewable: return "NotReviewable";
    case Errc::NothingAccepted: return "NothingAccepted";
    case Errc::UnknownExport: return "UnknownExport";
    case Errc::GradeOutOfRange: return "GradeOutOfRange";
    case Errc::RangeError: return "RangeError";
    case Errc::NoScores: return "NoScores";
    case Errc::UsageError: return "UsageError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

}  // namespace derivmine
