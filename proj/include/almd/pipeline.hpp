#pragma once

#include <string>
#include <vector>

#include "almd/config.hpp"
#include "almd/metrics.hpp"

namespace almd {

struct RunOptions {
  ScoreMethod method;
  Setup setup = Setup::kRandom;
  std::size_t tasks = kDefaultTasks;
  std::uint64_t seed = 0;
  /// When set, accuracy is evaluated at every task boundary and at the end.
  const LabeledEmbeddingSet* test = nullptr;
};

struct RunResult {
  StreamPlan plan;
  std::vector<StreamOutcome> outcomes;
  RunReport report;
  ModelSnapshot final_state;
  double seconds = 0.0;  // stream processing only, excluding evaluation
};

/// Builds the stream for `options.setup`, runs it through an engine started
/// from `start` with the split's ground-truth oracle, and aggregates metrics.
RunResult run_pipeline(ModelSnapshot start, const DatasetSplit& split, const RunOptions& options);

/// Split reconstructed from APP files alone: ID classes from id_app labels,
/// OOD classes from ood_app labels.
DatasetSplit split_from_app(LabeledEmbeddingSet id_app, LabeledEmbeddingSet ood_app,
                            LabeledEmbeddingSet test = {});

/// Ordered key=value report. Keys are stable and documented in the README.
class KeyValueReport {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, std::uint64_t value);
  void add(const std::string& key, bool value);
  void add_accuracy(const std::string& prefix, const AccuracyReport& acc);

  std::string render() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

KeyValueReport make_run_report(const RunConfig& config, const RunResult& result);
KeyValueReport make_eval_report(const ModelSnapshot& snapshot, const AccuracyReport& acc);

/// One tab-separated row per outcome, with a header line.
std::string render_outcome_log(const std::vector<StreamOutcome>& outcomes);

std::string format_double(double v);

}  // namespace almd
