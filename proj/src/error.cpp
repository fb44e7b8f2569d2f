#include "matcher/error.hpp"

namespace matcher {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEmptyMatch: return "EmptyMatch";
    case ErrorCode::kUnknownImage: return "UnknownImage";
    case ErrorCode::kDuplicateImage: return "DuplicateImage";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kInfeasibleWeights: return "InfeasibleWeights";
    case ErrorCode::kEmptySupport: return "EmptySupport";
    case ErrorCode::kZeroArea: return "ZeroArea";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace matcher
