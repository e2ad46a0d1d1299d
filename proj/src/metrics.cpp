#include "almd/metrics.hpp"

namespace almd {

double DetectionTally::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double DetectionTally::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double DetectionTally::f_score() const {
  const double p = precision();
  const double r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

DetectionTally& DetectionTally::operator+=(const DetectionTally& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

DetectionTally tally(std::span<const StreamOutcome> outcomes) {
  DetectionTally t;
  for (const auto& o : outcomes) {
    const bool flagged = o.decision.verdict == Verdict::kOod;
    if (flagged && o.ground_truth_ood) {
      ++t.tp;
    } else if (flagged) {
      ++t.fp;
    } else if (o.ground_truth_ood) {
      ++t.fn;
    } else {
      ++t.tn;
    }
  }
  return t;
}

AskCount count_asks(std::span<const StreamOutcome> outcomes) {
  AskCount c;
  for (const auto& o : outcomes) {
    if (!o.asked) continue;
    ++c.asks;
    if (o.oracle_failed) ++c.oracle_failures;
    if (o.mutation != Mutation::kNone) ++c.yielding_new;
  }
  return c;
}

AccuracyReport evaluate_accuracy(const ClassRegistry& registry, const SharedGaussianModel& model,
                                 const LabeledEmbeddingSet& test) {
  if (test.records.empty()) throw Error(ErrorCode::kEmptyInput, "evaluate_accuracy: empty test set");
  const PrototypeRefs all = registry.select(ClassSet::kAll);
  AccuracyReport r;
  for (const auto& rec : test.records) {
    const bool correct = classify_closed(rec.z, all, model) == rec.label;
    if (registry.in(rec.label, ClassSet::kInitial)) {
      ++r.n_id;
      r.correct_id += correct ? 1 : 0;
    } else {
      ++r.n_ood;
      r.correct_ood += correct ? 1 : 0;
    }
  }
  r.n_total = r.n_id + r.n_ood;
  auto ratio = [](std::uint64_t a, std::uint64_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  r.total = ratio(r.correct_id + r.correct_ood, r.n_total);
  r.id = ratio(r.correct_id, r.n_id);
  r.ood = ratio(r.correct_ood, r.n_ood);
  return r;
}

}  // namespace almd
