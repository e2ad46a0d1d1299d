#include "almd/scorer.hpp"

#include <limits>

namespace almd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonempty(const PrototypeRefs& protos, const char* what) {
  if (protos.empty()) {
    throw Error(ErrorCode::kEmptyInput, std::string(what) + ": no classes to score against");
  }
}

struct Nearest {
  double distance = kInf;
  ClassId id = 0;
};

// Smallest MD over protos; iteration is ascending by id so strict '<' keeps
// the smallest id on ties.
Nearest nearest(const Vector& z, const PrototypeRefs& protos, const SharedGaussianModel& model) {
  Nearest best;
  bool first = true;
  for (const auto* p : protos) {
    const double d = mahalanobis(z, p->mu, model);
    if (first || d < best.distance) {
      best = {d, p->id};
      first = false;
    }
  }
  return best;
}

double inverse_distance(double md) { return md == 0.0 ? kInf : 1.0 / md; }

Score confidence(const Vector& z, const PrototypeRefs& protos, const SharedGaussianModel& model,
                 const BackgroundModel* bg, ScoreKind kind) {
  if (kind == ScoreKind::kMd) return md_confidence(z, protos, model);
  if (bg == nullptr) throw Error(ErrorCode::kInvalidArgument, "RMD requires a background model");
  return rmd_confidence(z, protos, model, *bg);
}

}  // namespace

double default_threshold(ScoreKind kind) {
  return kind == ScoreKind::kMd ? kDefaultMdThreshold : kDefaultRmdThreshold;
}

const char* to_string(ScoreKind kind) { return kind == ScoreKind::kMd ? "MD" : "RMD"; }
const char* to_string(Verdict v) { return v == Verdict::kId ? "ID" : "OOD"; }

const char* to_string(Reason r) {
  switch (r) {
    case Reason::kAboveThreshold: return "ABOVE_THRESHOLD";
    case Reason::kBelowThreshold: return "BELOW_THRESHOLD";
    case Reason::kNearEmerging: return "NEAR_EMERGING";
  }
  return "?";
}

Score md_confidence(const Vector& z, const PrototypeRefs& protos,
                    const SharedGaussianModel& model) {
  require_nonempty(protos, "md_confidence");
  const Nearest n = nearest(z, protos, model);
  return {inverse_distance(n.distance), n.id};
}

Score rmd_confidence(const Vector& z, const PrototypeRefs& protos,
                     const SharedGaussianModel& model, const BackgroundModel& bg) {
  require_nonempty(protos, "rmd_confidence");
  const double background = mahalanobis(z, bg.mu, bg.model);
  Score best{-kInf, 0};
  bool first = true;
  for (const auto* p : protos) {
    const double rmd = mahalanobis(z, p->mu, model) - background;
    if (first || -rmd > best.confidence) {
      best = {-rmd, p->id};
      first = false;
    }
  }
  return best;
}

ClassId classify_closed(const Vector& z, const PrototypeRefs& protos,
                        const SharedGaussianModel& model) {
  require_nonempty(protos, "classify_closed");
  return nearest(z, protos, model).id;
}

Decision decide(const Vector& z, const ClassRegistry& registry, const SharedGaussianModel& model,
                const BackgroundModel* bg, const ScoreMethod& method) {
  if (method.leverage_emerging && registry.count(ClassSet::kEmerging) > 0) {
    const Score global = confidence(z, registry.select(ClassSet::kAll), model, bg, method.kind);
    if (registry.in(global.argmax, ClassSet::kEmerging)) {
      return {Verdict::kOod, global.argmax, global.confidence, Reason::kNearEmerging};
    }
  }
  const Score plus = confidence(z, registry.select(ClassSet::kPlus), model, bg, method.kind);
  if (plus.confidence < method.threshold) {
    return {Verdict::kOod, plus.argmax, plus.confidence, Reason::kBelowThreshold};
  }
  return {Verdict::kId, plus.argmax, plus.confidence, Reason::kAboveThreshold};
}

}  // namespace almd
