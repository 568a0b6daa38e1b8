#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wilding {

enum class ErrorCode {
  // embedding files and manifests
  BadMagic,
  VersionUnsupported,
  BadFlags,
  InvalidDimension,
  TruncatedFile,
  TrailingBytes,
  NonFiniteValue,
  DuplicateId,
  ManifestMismatch,
  MalformedJson,
  IoError,
  // parameters and shapes
  InvalidParameter,
  DimMismatch,
  ShapeMismatch,
  // text head
  EmptyDescriptionSet,
  BetaOutOfRange,
  MissingTemplateEmbeddings,
  // similarity
  ZeroNormRow,
  AlphaOutOfRange,
  EmptyMatrix,
  // objective
  InvalidTemperature,
  LabelOutOfRange,
  EmptyBatch,
  // trainer / evaluator
  AlignmentMismatch,
  UnknownLabel,
  InvalidFraction,
  TooFewSamples,
  InvalidConfig,
  OutsideSearchSpace,
  EmptyPresentSet,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library is reported as an Error carrying a code that
/// tests and the CLI can dispatch on. The message names the offending
/// location (byte offset, row, field) when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

  /// I/O failures map to exit code 2, everything else to 1.
  bool is_io() const noexcept { return code_ == ErrorCode::IoError; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace wilding
