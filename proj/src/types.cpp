#include "almd/types.hpp"

namespace almd {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kFactorization: return "factorization";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInsufficientSamples: return "insufficient-samples";
    case ErrorCode::kOracle: return "oracle";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kBadChecksum: return "bad-checksum";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kBadDimension: return "bad-dimension";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace almd
