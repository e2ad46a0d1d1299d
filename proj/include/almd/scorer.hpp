#pragma once

#include "almd/registry.hpp"

namespace almd {

enum class ScoreKind { kMd, kRmd };

inline constexpr double kDefaultMdThreshold = 4.9;
inline constexpr double kDefaultRmdThreshold = 0.012;

double default_threshold(ScoreKind kind);
const char* to_string(ScoreKind kind);

/// OOD score and its cutoff. `leverage_emerging` toggles the C^E proximity
/// rule; turning it off gives the plain static-threshold detector.
struct ScoreMethod {
  ScoreKind kind = ScoreKind::kMd;
  double threshold = kDefaultMdThreshold;
  bool leverage_emerging = true;

  static ScoreMethod md(double threshold = kDefaultMdThreshold) {
    return {ScoreKind::kMd, threshold, true};
  }
  static ScoreMethod rmd(double threshold = kDefaultRmdThreshold) {
    return {ScoreKind::kRmd, threshold, true};
  }
};

struct Score {
  double confidence = 0.0;
  ClassId argmax = 0;
};

enum class Verdict : std::uint8_t { kId, kOod };
enum class Reason : std::uint8_t { kAboveThreshold, kBelowThreshold, kNearEmerging };

const char* to_string(Verdict v);
const char* to_string(Reason r);

struct Decision {
  Verdict verdict = Verdict::kId;
  ClassId predicted = 0;
  double confidence = 0.0;
  Reason reason = Reason::kAboveThreshold;

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// max_i 1 / MD_i over `protos`. A zero distance gives +inf.
Score md_confidence(const Vector& z, const PrototypeRefs& protos,
                    const SharedGaussianModel& model);

/// max_i -(MD_i - MD_background) over `protos`.
Score rmd_confidence(const Vector& z, const PrototypeRefs& protos,
                     const SharedGaussianModel& model, const BackgroundModel& bg);

/// Nearest-mean class under MD with ties going to the smallest id.
ClassId classify_closed(const Vector& z, const PrototypeRefs& protos,
                        const SharedGaussianModel& model);

/// The continual OOD decision rule.
///
/// 1. If C^E is non-empty (and the method leverages it), the nearest class
///    over C^A under the active score is found; landing in C^E is OOD
///    regardless of confidence.
/// 2. Otherwise the confidence over C^+ is compared against the threshold;
///    below it is OOD.
/// 3. Everything else is ID and predicted as the C^+ argmax.
///
/// `bg` is only consulted for RMD and may be null for MD.
Decision decide(const Vector& z, const ClassRegistry& registry, const SharedGaussianModel& model,
                const BackgroundModel* bg, const ScoreMethod& method);

}  // namespace almd
