#pragma once

#include <span>
#include <vector>

#include "almd/types.hpp"

namespace almd {

inline constexpr double kDefaultRidge = 1e-4;

/// Shared covariance with its regularized Cholesky factor.
///
/// The factor is of (sigma + ridge * s * I) with s = trace(sigma) / d, so the
/// regularization is invariant to a global rescaling of the features. When
/// sigma is identically zero (for example one sample per class) s falls back
/// to 1 so a positive ridge still yields a usable metric.
///
/// Immutable after construction.
class SharedGaussianModel {
 public:
  SharedGaussianModel(Matrix sigma, double ridge);

  Eigen::Index dim() const { return sigma_.rows(); }
  const Matrix& sigma() const { return sigma_; }
  double ridge() const { return ridge_; }
  double ridge_scale() const { return scale_; }

  /// Lower-triangular L with L L^T = sigma + ridge * s * I.
  Matrix factor() const { return llt_.matrixL(); }

  /// Squared norm of L^{-1} diff.
  double whitened_sq_norm(const Vector& diff) const;

  /// Solves (sigma + ridge * s * I) x = rhs.
  Vector solve(const Vector& rhs) const;

  /// The factor is a deterministic function of sigma and ridge.
  friend bool operator==(const SharedGaussianModel& a, const SharedGaussianModel& b) {
    return a.ridge_ == b.ridge_ && a.sigma_ == b.sigma_;
  }

 private:
  Matrix sigma_;
  double ridge_;
  double scale_;
  Eigen::LLT<Matrix> llt_;
};

/// Class-agnostic mean and covariance of the pre-deployment data.
struct BackgroundModel {
  Vector mu;
  SharedGaussianModel model;

  friend bool operator==(const BackgroundModel&, const BackgroundModel&) = default;
};

enum class ClassState : std::uint32_t {
  kInitial = 0,
  kEmerging = 1,
  kWellLearned = 2,
};

const char* to_string(ClassState state);

struct ClassPrototype {
  ClassId id = 0;
  Vector mu;
  std::uint64_t count = 0;
  ClassState state = ClassState::kEmerging;

  friend bool operator==(const ClassPrototype&, const ClassPrototype&) = default;
};

struct InitialFit {
  std::vector<ClassPrototype> prototypes;  // ascending class id
  SharedGaussianModel shared;
  BackgroundModel background;
};

/// Batch estimates from pre-deployment data: per-class means, pooled
/// within-class covariance and global mean/covariance, both with divisor N.
InitialFit fit_initial(std::span<const Vector> samples,
                       std::span<const ClassId> labels,
                       double ridge = kDefaultRidge);

/// sqrt((z - mu)^T (sigma + ridge * s * I)^{-1} (z - mu)) by triangular solve.
double mahalanobis(const Vector& z, const Vector& mu,
                   const SharedGaussianModel& model);

/// Running-mean update mu <- (n mu + z) / (n + 1). Rejects INITIAL classes.
/// The returned prototype is WELL_LEARNED once its count reaches `threshold`.
ClassPrototype update_mean(const ClassPrototype& proto, const Vector& z,
                           std::uint64_t threshold);

}  // namespace almd
