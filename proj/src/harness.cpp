#include "almd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace almd {
namespace {

// Sub-stream tags. Changing any of these changes every seeded artifact.
constexpr std::uint64_t kTagClassShuffle = 1;
constexpr std::uint64_t kTagPerClassBase = 0x1000;
constexpr std::uint64_t kTagStream = 2;
constexpr std::uint64_t kTagIdChunks = 3;
constexpr std::uint64_t kTagTaskBase = 0x2000;
constexpr std::uint64_t kTagMeans = 4;
constexpr std::uint64_t kTagRotation = 5;
constexpr std::uint64_t kTagSamples = 6;

LabeledEmbeddingSet empty_like(const LabeledEmbeddingSet& set) {
  LabeledEmbeddingSet out;
  out.dim = set.dim;
  out.class_names = set.class_names;
  return out;
}

}  // namespace

std::vector<ClassId> LabeledEmbeddingSet::classes() const {
  std::set<ClassId> ids;
  for (const auto& r : records) ids.insert(r.label);
  return {ids.begin(), ids.end()};
}

std::map<ClassId, std::size_t> LabeledEmbeddingSet::class_counts() const {
  std::map<ClassId, std::size_t> counts;
  for (const auto& r : records) ++counts[r.label];
  return counts;
}

void LabeledEmbeddingSet::validate() const {
  if (dim == 0) throw Error(ErrorCode::kBadDimension, "embedding set has dimension 0");
  for (const auto& r : records) {
    require_dim(r.z.size(), dim, "embedding record");
    if (!r.z.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite embedding");
  }
}

DatasetSplit split(const LabeledEmbeddingSet& dataset, const SplitSpec& spec,
                   LabeledEmbeddingSet test) {
  dataset.validate();
  if (!(spec.id_class_fraction > 0.0 && spec.id_class_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "id_class_fraction must lie in (0, 1]");
  }
  const SplitMix64 root(spec.seed);

  std::vector<ClassId> classes = dataset.classes();
  const auto n_id = static_cast<std::size_t>(
      std::llround(spec.id_class_fraction * static_cast<double>(classes.size())));
  if (n_id == 0 || n_id >= classes.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "class fraction leaves no classes on one side of the ID/OOD split");
  }
  auto class_rng = root.fork(kTagClassShuffle);
  class_rng.shuffle(classes);

  DatasetSplit out;
  out.id_classes.assign(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(n_id));
  out.ood_classes.assign(classes.begin() + static_cast<std::ptrdiff_t>(n_id), classes.end());
  std::sort(out.id_classes.begin(), out.id_classes.end());
  std::sort(out.ood_classes.begin(), out.ood_classes.end());
  out.id_train = empty_like(dataset);
  out.id_app = empty_like(dataset);
  out.ood_app = empty_like(dataset);
  out.test = std::move(test);

  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    by_class[dataset.records[i].label].push_back(i);
  }

  const std::set<ClassId> id_set(out.id_classes.begin(), out.id_classes.end());
  for (auto& [label, members] : by_class) {
    const bool is_id = id_set.contains(label);
    const std::size_t need = spec.app_per_class + (is_id ? spec.train_per_class : 0);
    if (members.size() < need) {
      throw Error(ErrorCode::kInsufficientSamples,
                  "class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                      " samples, needs " + std::to_string(need));
    }
    auto rng = root.fork(kTagPerClassBase + label);
    rng.shuffle(members);
    std::size_t k = 0;
    if (is_id) {
      for (; k < spec.train_per_class; ++k) out.id_train.records.push_back(dataset.records[members[k]]);
    }
    auto& app = is_id ? out.id_app : out.ood_app;
    for (std::size_t j = 0; j < spec.app_per_class; ++j, ++k) {
      app.records.push_back(dataset.records[members[k]]);
    }
  }
  return out;
}

StreamPlan build_random_stream(const DatasetSplit& split, std::uint64_t seed) {
  StreamPlan plan;
  plan.order.resize(split.id_app.records.size() + split.ood_app.records.size());
  std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
  auto rng = SplitMix64(seed).fork(kTagStream);
  rng.shuffle(plan.order);
  plan.task_starts = {0};
  plan.task_classes = {split.ood_classes};
  return plan;
}

StreamPlan build_class_incremental_stream(const DatasetSplit& split, std::size_t tasks,
                                          std::uint64_t seed) {
  if (tasks < 1) throw Error(ErrorCode::kInvalidArgument, "tasks must be at least 1");
  if (tasks > split.ood_classes.size()) {
    throw Error(ErrorCode::kInvalidArgument, "more tasks than OOD classes");
  }
  const SplitMix64 root(seed);

  std::vector<ClassId> ood = split.ood_classes;
  auto class_rng = root.fork(kTagClassShuffle);
  class_rng.shuffle(ood);

  const std::size_t n_id = split.id_app.records.size();
  std::vector<std::size_t> id_idx(n_id);
  std::iota(id_idx.begin(), id_idx.end(), std::size_t{0});
  auto id_rng = root.fork(kTagIdChunks);
  id_rng.shuffle(id_idx);

  const std::size_t classes_per_task = ood.size() / tasks;
  const std::size_t id_per_task = n_id / tasks;

  StreamPlan plan;
  for (std::size_t t = 0; t < tasks; ++t) {
    const bool last = t + 1 == tasks;
    const auto c_begin = ood.begin() + static_cast<std::ptrdiff_t>(t * classes_per_task);
    const auto c_end = last ? ood.end() : c_begin + static_cast<std::ptrdiff_t>(classes_per_task);
    std::vector<ClassId> task_classes(c_begin, c_end);
    std::sort(task_classes.begin(), task_classes.end());
    const std::set<ClassId> in_task(task_classes.begin(), task_classes.end());

    std::vector<std::size_t> members;
    const std::size_t i_begin = t * id_per_task;
    const std::size_t i_end = last ? n_id : i_begin + id_per_task;
    members.insert(members.end(), id_idx.begin() + static_cast<std::ptrdiff_t>(i_begin),
                   id_idx.begin() + static_cast<std::ptrdiff_t>(i_end));
    for (std::size_t j = 0; j < split.ood_app.records.size(); ++j) {
      if (in_task.contains(split.ood_app.records[j].label)) members.push_back(n_id + j);
    }
    auto task_rng = root.fork(kTagTaskBase + t);
    task_rng.shuffle(members);

    plan.task_starts.push_back(plan.order.size());
    plan.order.insert(plan.order.end(), members.begin(), members.end());
    plan.task_classes.push_back(std::move(task_classes));
  }
  return plan;
}

std::vector<StreamSample> materialize(const DatasetSplit& split, const StreamPlan& plan) {
  const std::size_t n_id = split.id_app.records.size();
  std::vector<StreamSample> stream;
  stream.reserve(plan.order.size());
  for (std::size_t idx : plan.order) {
    const auto& rec = idx < n_id ? split.id_app.records.at(idx)
                                 : split.ood_app.records.at(idx - n_id);
    stream.push_back({idx, rec.z, rec.label});
  }
  return stream;
}

DatasetOracle::DatasetOracle(const DatasetSplit& split) {
  labels_.reserve(split.id_app.records.size() + split.ood_app.records.size());
  for (const auto& r : split.id_app.records) labels_.push_back(r.label);
  for (const auto& r : split.ood_app.records) labels_.push_back(r.label);
}

ClassId DatasetOracle::label(std::size_t index) const {
  if (index >= labels_.size()) {
    throw Error(ErrorCode::kOracle, "oracle has no label for index " + std::to_string(index));
  }
  return labels_[index];
}

SyntheticWorld make_world(const SyntheticSpec& spec) {
  if (spec.num_classes == 0 || spec.dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic spec needs classes and a dimension");
  }
  if (!(spec.spread >= 0.0) || !std::isfinite(spec.spread)) {
    throw Error(ErrorCode::kInvalidArgument, "spread must be finite and non-negative");
  }
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const SplitMix64 root(spec.seed);
  SyntheticWorld world;

  if (spec.covariance.explicit_matrix) {
    world.covariance = *spec.covariance.explicit_matrix;
    require_dim(world.covariance.rows(), d, "covariance spec");
    require_dim(world.covariance.cols(), d, "covariance spec");
  } else {
    const double lo = spec.covariance.min_eigenvalue;
    const double hi = spec.covariance.max_eigenvalue;
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
      throw Error(ErrorCode::kFactorization, "covariance eigenvalues must be positive");
    }
    auto rot_rng = root.fork(kTagRotation);
    Matrix g(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rot_rng.normal();
    }
    const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector lambda(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double t = d == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(d - 1);
      lambda(k) = lo * std::pow(hi / lo, t);
    }
    world.covariance = q * lambda.asDiagonal() * q.transpose();
  }
  world.covariance = (0.5 * (world.covariance + world.covariance.transpose())).eval();
  Eigen::LLT<Matrix> llt(world.covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kFactorization, "synthetic covariance is not positive definite");
  }
  world.covariance_factor = llt.matrixL();

  auto mean_rng = root.fork(kTagMeans);
  world.means.reserve(spec.num_classes);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    Vector g(d);
    for (Eigen::Index i = 0; i < d; ++i) g(i) = mean_rng.normal();
    world.means.push_back(spec.spread * g / g.norm());
  }
  return world;
}

LabeledEmbeddingSet sample_world(const SyntheticWorld& world, std::size_t per_class,
                                 std::uint64_t seed) {
  const auto d = world.covariance.rows();
  auto rng = SplitMix64(seed).fork(kTagSamples);
  LabeledEmbeddingSet out;
  out.dim = static_cast<std::uint32_t>(d);
  out.records.reserve(world.means.size() * per_class);
  Vector g(d);
  for (std::size_t c = 0; c < world.means.size(); ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      for (Eigen::Index i = 0; i < d; ++i) g(i) = rng.normal();
      out.records.push_back({static_cast<ClassId>(c), world.means[c] + world.covariance_factor * g});
    }
  }
  return out;
}

LabeledEmbeddingSet synth_generate(const SyntheticSpec& spec, std::size_t samples_per_class) {
  return sample_world(make_world(spec), samples_per_class, spec.seed);
}

std::pair<LabeledEmbeddingSet, LabeledEmbeddingSet> hold_out(const LabeledEmbeddingSet& set,
                                                             std::size_t per_class) {
  auto counts = set.class_counts();
  for (const auto& [label, n] : counts) {
    if (n < per_class) {
      throw Error(ErrorCode::kInsufficientSamples,
                  "class " + std::to_string(label) + " too small to hold out " +
                      std::to_string(per_class));
    }
  }
  std::pair<LabeledEmbeddingSet, LabeledEmbeddingSet> out{empty_like(set), empty_like(set)};
  std::map<ClassId, std::size_t> seen;
  for (const auto& r : set.records) {
    const std::size_t k = seen[r.label]++;
    (k + per_class < counts[r.label] ? out.first : out.second).records.push_back(r);
  }
  return out;
}

}  // namespace almd
