#include "almd/gaussian.hpp"

#include <cmath>
#include <map>
#include <string>

namespace almd {
namespace {

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": non-finite entry");
  }
}

void check_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-9 * scale) {
        throw Error(ErrorCode::kInvalidArgument, "covariance is not symmetric");
      }
    }
  }
}

}  // namespace

SharedGaussianModel::SharedGaussianModel(Matrix sigma, double ridge)
    : sigma_(std::move(sigma)), ridge_(ridge), scale_(1.0) {
  if (sigma_.rows() == 0 || sigma_.rows() != sigma_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance must be square and non-empty");
  }
  if (!std::isfinite(ridge_) || ridge_ < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "ridge must be finite and non-negative");
  }
  if (!sigma_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "covariance has non-finite entries");
  }
  check_symmetric(sigma_);

  const double trace = sigma_.trace();
  if (trace > 0.0) scale_ = trace / static_cast<double>(sigma_.rows());

  Matrix regularized = sigma_;
  regularized.diagonal().array() += ridge_ * scale_;
  llt_.compute(regularized);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::kFactorization,
                "covariance is not positive definite after ridge " + std::to_string(ridge_));
  }
}

double SharedGaussianModel::whitened_sq_norm(const Vector& diff) const {
  const Vector w = llt_.matrixL().solve(diff);
  return w.squaredNorm();
}

Vector SharedGaussianModel::solve(const Vector& rhs) const {
  require_dim(rhs.size(), dim(), "solve");
  return llt_.solve(rhs);
}

const char* to_string(ClassState state) {
  switch (state) {
    case ClassState::kInitial: return "INITIAL";
    case ClassState::kEmerging: return "EMERGING";
    case ClassState::kWellLearned: return "WELL_LEARNED";
  }
  return "?";
}

InitialFit fit_initial(std::span<const Vector> samples, std::span<const ClassId> labels,
                       double ridge) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "fit_initial: no samples");
  if (samples.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "fit_initial: samples and labels differ in length");
  }
  const Eigen::Index d = samples.front().size();
  if (d == 0) throw Error(ErrorCode::kDimensionMismatch, "fit_initial: zero-dimensional samples");

  struct Accum {
    Vector sum;
    std::uint64_t n = 0;
  };
  std::map<ClassId, Accum> per_class;
  Vector total = Vector::Zero(d);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    require_dim(samples[k].size(), d, "fit_initial");
    check_finite(samples[k], "fit_initial");
    auto& acc = per_class[labels[k]];
    if (acc.n == 0) acc.sum = Vector::Zero(d);
    acc.sum += samples[k];
    ++acc.n;
    total += samples[k];
  }
  if (per_class.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "fit_initial: need at least two classes");
  }

  const auto n = static_cast<double>(samples.size());
  std::map<ClassId, Vector> means;
  for (const auto& [id, acc] : per_class) {
    means.emplace(id, acc.sum / static_cast<double>(acc.n));
  }
  const Vector mu_c = total / n;

  Matrix within = Matrix::Zero(d, d);
  Matrix global = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Vector r = samples[k] - means.at(labels[k]);
    within.selfadjointView<Eigen::Lower>().rankUpdate(r);
    const Vector g = samples[k] - mu_c;
    global.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  within = within.selfadjointView<Eigen::Lower>();
  global = global.selfadjointView<Eigen::Lower>();
  within /= n;
  global /= n;

  std::vector<ClassPrototype> protos;
  protos.reserve(per_class.size());
  for (const auto& [id, acc] : per_class) {
    protos.push_back({id, means.at(id), acc.n, ClassState::kInitial});
  }
  return InitialFit{std::move(protos), SharedGaussianModel(std::move(within), ridge),
                    BackgroundModel{mu_c, SharedGaussianModel(std::move(global), ridge)}};
}

double mahalanobis(const Vector& z, const Vector& mu, const SharedGaussianModel& model) {
  require_dim(z.size(), model.dim(), "mahalanobis");
  require_dim(mu.size(), model.dim(), "mahalanobis");
  return std::sqrt(model.whitened_sq_norm(z - mu));
}

ClassPrototype update_mean(const ClassPrototype& proto, const Vector& z,
                           std::uint64_t threshold) {
  if (proto.state == ClassState::kInitial) {
    throw Error(ErrorCode::kProtocol,
                "update_mean: class " + std::to_string(proto.id) + " is an initial class");
  }
  ClassPrototype next = proto;
  if (proto.count == 0) {
    next.mu = z;
  } else {
    require_dim(z.size(), proto.mu.size(), "update_mean");
    const auto n = static_cast<double>(proto.count);
    next.mu = (n * proto.mu + z) / (n + 1.0);
  }
  next.count = proto.count + 1;
  next.state = next.count >= threshold ? ClassState::kWellLearned : ClassState::kEmerging;
  return next;
}

}  // namespace almd
