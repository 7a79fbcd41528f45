#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maldyn {

enum class ErrorCode {
  MalformedXml,
  SchemaViolation,
  DuplicateSampleId,
  MissingField,
  UnreadableFile,
  EmptyCorpus,
  InvalidArgument,
  VocabularyMismatch,
  ZeroWidth,
  SingleClass,
  EmptyData,
  KTooLarge,
  NonMirroredLayers,
  NaNLoss,
  NonPositiveEps,
  CorpusTooShort,
  ZeroVector,
  DimensionMismatch,
  EmptyCandidate,
  UnnormalizedHistogram,
  UnknownScheme,
  UndatedSample,
  EmptyGeneratedSet,
  FormatError,
  UsageError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Attaches a sample id to a data error raised while processing that sample.
class SampleError : public Error {
 public:
  SampleError(std::string sample_id, const Error& cause)
      : Error(cause.code(), "[" + sample_id + "] " + cause.what()), sample_id_(std::move(sample_id)) {}

  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  std::string sample_id_;
};

}  // namespace maldyn
