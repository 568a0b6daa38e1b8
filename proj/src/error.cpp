#include "wilding/error.hpp"

namespace wilding {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::BadFlags: return "BadFlags";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDescriptionSet: return "EmptyDescriptionSet";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::MissingTemplateEmbeddings: return "MissingTemplateEmbeddings";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::OutsideSearchSpace: return "OutsideSearchSpace";
    case ErrorCode::EmptyPresentSet: return "EmptyPresentSet";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace wilding
