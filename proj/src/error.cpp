#include "maldyn/error.hpp"

namespace maldyn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::ZeroWidth: return "ZeroWidth";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NonMirroredLayers: return "NonMirroredLayers";
    case ErrorCode::NaNLoss: return "NaNLoss";
    case ErrorCode::NonPositiveEps: return "NonPositiveEps";
    case ErrorCode::CorpusTooShort: return "CorpusTooShort";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyCandidate: return "EmptyCandidate";
    case ErrorCode::UnnormalizedHistogram: return "UnnormalizedHistogram";
    case ErrorCode::UnknownScheme: return "UnknownScheme";
    case ErrorCode::UndatedSample: return "UndatedSample";
    case ErrorCode::EmptyGeneratedSet: return "EmptyGeneratedSet";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace maldyn
