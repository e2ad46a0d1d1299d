#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "almd/engine.hpp"
#include "almd/rng.hpp"

namespace almd {

struct LabeledRecord {
  ClassId label = 0;
  Vector z;

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

struct LabeledEmbeddingSet {
  std::uint32_t dim = 0;
  std::vector<LabeledRecord> records;
  std::map<ClassId, std::string> class_names;

  std::vector<ClassId> classes() const;  // ascending, unique
  std::map<ClassId, std::size_t> class_counts() const;
  void validate() const;

  friend bool operator==(const LabeledEmbeddingSet&, const LabeledEmbeddingSet&) = default;
};

inline constexpr std::size_t kDefaultTrainPerClass = 450;
inline constexpr std::size_t kDefaultAppPerClass = 50;
inline constexpr std::size_t kDefaultTasks = 5;

struct SplitSpec {
  std::uint64_t seed = 0;
  double id_class_fraction = 0.5;
  std::size_t app_per_class = kDefaultAppPerClass;
  std::size_t train_per_class = kDefaultTrainPerClass;
};

struct DatasetSplit {
  std::vector<ClassId> id_classes;   // ascending
  std::vector<ClassId> ood_classes;  // ascending
  LabeledEmbeddingSet id_train;
  LabeledEmbeddingSet id_app;
  LabeledEmbeddingSet ood_app;
  LabeledEmbeddingSet test;
};

/// Halves the classes into ID/OOD sets by seeded shuffle, then draws the
/// per-class Train and APP quotas. OOD classes contribute only APP samples;
/// the rest of their data is dropped. `test` is carried through untouched.
DatasetSplit split(const LabeledEmbeddingSet& dataset, const SplitSpec& spec,
                   LabeledEmbeddingSet test = {});

/// An APP stream. Sample indices address the pool id_app ++ ood_app.
struct StreamPlan {
  std::vector<std::size_t> order;
  /// Start offset of each task within `order`; a single 0 for random arrival.
  std::vector<std::size_t> task_starts;
  std::vector<std::vector<ClassId>> task_classes;
};

/// Setup 1: uniform shuffle of all APP samples.
StreamPlan build_random_stream(const DatasetSplit& split, std::uint64_t seed);

/// Setup 2: OOD classes split evenly over `tasks` (the last task absorbs any
/// remainder), each task gets a random share of ID APP plus all APP samples
/// of its OOD classes, shuffled within the task.
StreamPlan build_class_incremental_stream(const DatasetSplit& split, std::size_t tasks,
                                          std::uint64_t seed);

/// The APP pool (id_app then ood_app) materialized in `plan` order.
std::vector<StreamSample> materialize(const DatasetSplit& split, const StreamPlan& plan);

/// Oracle answering from the APP pool's ground-truth labels.
class DatasetOracle : public LabelOracle {
 public:
  explicit DatasetOracle(const DatasetSplit& split);
  ClassId label(std::size_t index) const override;
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<ClassId> labels_;
};

/// Shared covariance used by the synthetic generator: Q diag(lambda) Q^T with
/// a seeded random rotation Q and eigenvalues log-spaced between the bounds,
/// or an explicit matrix when given.
struct CovarianceSpec {
  double min_eigenvalue = 0.5;
  double max_eigenvalue = 2.0;
  std::optional<Matrix> explicit_matrix;
};

struct SyntheticSpec {
  std::size_t num_classes = 40;
  std::size_t dim = 32;
  double spread = 10.0;
  CovarianceSpec covariance;
  std::uint64_t seed = 0;
};

/// Ground-truth generative model: class means on a sphere of radius
/// `spread` and one shared covariance.
struct SyntheticWorld {
  std::vector<Vector> means;
  Matrix covariance;
  Matrix covariance_factor;  // lower Cholesky factor of `covariance`
};

SyntheticWorld make_world(const SyntheticSpec& spec);

/// `per_class` i.i.d. draws from every class, grouped by class.
LabeledEmbeddingSet sample_world(const SyntheticWorld& world, std::size_t per_class,
                                 std::uint64_t seed);

/// make_world followed by sample_world with the same seed.
LabeledEmbeddingSet synth_generate(const SyntheticSpec& spec, std::size_t samples_per_class);

/// Moves the last `per_class` records of each class into a second set.
std::pair<LabeledEmbeddingSet, LabeledEmbeddingSet> hold_out(const LabeledEmbeddingSet& set,
                                                             std::size_t per_class);

}  // namespace almd
