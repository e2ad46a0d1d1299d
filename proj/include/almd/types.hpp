#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace almd {

/// Feature vector z = f(x). Stored in double precision regardless of the
/// on-disk float width.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Opaque class label. Matches the 32-bit label field of the embedding file.
using ClassId = std::uint32_t;

enum class ErrorCode {
  kDimensionMismatch = 10,
  kEmptyInput = 11,
  kFactorization = 12,
  kProtocol = 13,
  kInvalidArgument = 14,
  kInsufficientSamples = 15,
  kOracle = 16,
  kIo = 20,
  kBadMagic = 21,
  kBadChecksum = 22,
  kVersionMismatch = 23,
  kTruncated = 24,
  kBadDimension = 25,
  kConfig = 30,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": dimension " + std::to_string(got) +
                    " does not match model dimension " + std::to_string(want));
  }
}

}  // namespace almd
