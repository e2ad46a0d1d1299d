#pragma once

#include <optional>
#include <span>
#include <vector>

#include "almd/engine.hpp"
#include "almd/harness.hpp"

namespace almd {

/// OOD is the positive class; ground truth is StreamOutcome::ground_truth_ood.
struct DetectionTally {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  double precision() const;
  double recall() const;
  /// 2PR / (P + R), or 0 when P + R == 0.
  double f_score() const;
  /// No predicted and no actual positives: F is reported as 0 and flagged.
  bool degenerate() const { return tp + fp + fn == 0; }

  DetectionTally& operator+=(const DetectionTally& o);
  friend bool operator==(const DetectionTally&, const DetectionTally&) = default;
};

DetectionTally tally(std::span<const StreamOutcome> outcomes);

struct AskCount {
  std::uint64_t asks = 0;
  /// Asks whose answer named a post-deployment class (anything outside C).
  std::uint64_t yielding_new = 0;
  std::uint64_t oracle_failures = 0;
};

AskCount count_asks(std::span<const StreamOutcome> outcomes);

struct AccuracyReport {
  double total = 0.0;
  double id = 0.0;
  double ood = 0.0;
  std::uint64_t n_total = 0;
  std::uint64_t n_id = 0;
  std::uint64_t n_ood = 0;
  std::uint64_t correct_id = 0;
  std::uint64_t correct_ood = 0;
};

/// Closed-set nearest-mean accuracy over every class in C^A, with no
/// rejection. Test samples of the initial classes form the ID subset; all
/// others (including never-seen classes, which always count as errors) form
/// the OOD subset.
AccuracyReport evaluate_accuracy(const ClassRegistry& registry, const SharedGaussianModel& model,
                                 const LabeledEmbeddingSet& test);

struct TaskCheckpoint {
  std::size_t task = 0;
  std::size_t samples_seen = 0;  // cumulative, at the end of the task
  DetectionTally task_tally;     // this task only
  AskCount task_asks;
  std::size_t classes_known = 0;      // |C^A|
  std::size_t classes_learned = 0;    // |C^L|
  std::optional<AccuracyReport> accuracy;
};

struct RunReport {
  DetectionTally detection;
  AskCount asks;
  std::optional<AccuracyReport> accuracy;
  std::vector<TaskCheckpoint> checkpoints;
};

}  // namespace almd
