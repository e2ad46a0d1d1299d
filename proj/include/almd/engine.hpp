#pragma once

#include <optional>
#include <vector>

#include "almd/scorer.hpp"

namespace almd {

/// Everything a deployment carries: the frozen metric, the frozen
/// background, and the growing class registry.
struct ModelSnapshot {
  ClassRegistry registry;
  SharedGaussianModel shared;
  BackgroundModel background;

  friend bool operator==(const ModelSnapshot&, const ModelSnapshot&) = default;
};

ModelSnapshot make_snapshot(InitialFit fit,
                            std::uint64_t threshold = kDefaultWellLearnedThreshold);

/// Label source queried for samples flagged OOD.
class LabelOracle {
 public:
  virtual ~LabelOracle() = default;
  virtual ClassId label(std::size_t index) const = 0;
};

struct StreamSample {
  std::size_t index = 0;
  Vector z;
  /// Ground-truth class for auditing only. The engine never reads it when
  /// making decisions.
  std::optional<ClassId> truth;
};

enum class Mutation : std::uint8_t { kNone, kCreated, kUpdated, kPromoted };
const char* to_string(Mutation m);

struct StreamOutcome {
  std::size_t index = 0;
  Decision decision;
  bool asked = false;
  std::optional<ClassId> oracle_label;
  Mutation mutation = Mutation::kNone;
  bool ground_truth_ood = false;
  std::optional<ClassId> truth;
  bool oracle_failed = false;

  friend bool operator==(const StreamOutcome&, const StreamOutcome&) = default;
};

/// The post-deployment state machine. Sequential by contract; read-only
/// views of the registry can be scored concurrently between calls.
class Engine {
 public:
  explicit Engine(ModelSnapshot snapshot);

  /// Detect, ask on OOD, learn the answer when it names a new class.
  StreamOutcome process_sample(const Vector& z, std::size_t index, const LabelOracle& oracle,
                               const ScoreMethod& method,
                               std::optional<ClassId> truth = std::nullopt);

  std::vector<StreamOutcome> run_stream(const std::vector<StreamSample>& stream,
                                        const LabelOracle& oracle, const ScoreMethod& method);

  const ClassRegistry& registry() const { return state_.registry; }
  const SharedGaussianModel& shared() const { return state_.shared; }
  const BackgroundModel& background() const { return state_.background; }

  ModelSnapshot snapshot() const { return state_; }

 private:
  ModelSnapshot state_;
};

}  // namespace almd
