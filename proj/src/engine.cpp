#include "almd/engine.hpp"

#include <unordered_set>

namespace almd {

const char* to_string(Mutation m) {
  switch (m) {
    case Mutation::kNone: return "NONE";
    case Mutation::kCreated: return "CREATED";
    case Mutation::kUpdated: return "UPDATED";
    case Mutation::kPromoted: return "PROMOTED";
  }
  return "?";
}

ModelSnapshot make_snapshot(InitialFit fit, std::uint64_t threshold) {
  return {ClassRegistry(std::move(fit.prototypes), threshold), std::move(fit.shared),
          std::move(fit.background)};
}

Engine::Engine(ModelSnapshot snapshot) : state_(std::move(snapshot)) {
  if (state_.registry.count(ClassSet::kPlus) == 0) {
    throw Error(ErrorCode::kEmptyInput, "engine needs at least one well-learned class");
  }
  require_dim(state_.background.mu.size(), state_.shared.dim(), "background mean");
  require_dim(state_.background.model.dim(), state_.shared.dim(), "background covariance");
  for (const auto& [id, p] : state_.registry.prototypes()) {
    require_dim(p.mu.size(), state_.shared.dim(), "class mean");
  }
}

StreamOutcome Engine::process_sample(const Vector& z, std::size_t index,
                                     const LabelOracle& oracle, const ScoreMethod& method,
                                     std::optional<ClassId> truth) {
  require_dim(z.size(), state_.shared.dim(), "process_sample");
  auto& registry = state_.registry;

  StreamOutcome out;
  out.index = index;
  out.truth = truth;
  out.ground_truth_ood = truth.has_value() && !registry.in(*truth, ClassSet::kPlus);
  out.decision = decide(z, registry, state_.shared, &state_.background, method);
  if (out.decision.verdict == Verdict::kId) return out;

  out.asked = true;
  ClassId label = 0;
  try {
    label = oracle.label(index);
  } catch (const std::exception&) {
    out.oracle_failed = true;
    return out;
  }
  out.oracle_label = label;

  const ClassPrototype* existing = registry.find(label);
  if (existing != nullptr && existing->state == ClassState::kInitial) return out;

  ClassPrototype base = existing != nullptr
                            ? *existing
                            : ClassPrototype{label, Vector::Zero(z.size()), 0,
                                             ClassState::kEmerging};
  const bool was_learned = base.state == ClassState::kWellLearned;
  ClassPrototype next = update_mean(base, z, registry.threshold());
  if (next.state == ClassState::kWellLearned && !was_learned) {
    out.mutation = Mutation::kPromoted;
  } else {
    out.mutation = existing == nullptr ? Mutation::kCreated : Mutation::kUpdated;
  }
  registry.put(std::move(next));
  return out;
}

std::vector<StreamOutcome> Engine::run_stream(const std::vector<StreamSample>& stream,
                                              const LabelOracle& oracle,
                                              const ScoreMethod& method) {
  std::unordered_set<std::size_t> seen;
  seen.reserve(stream.size());
  for (const auto& s : stream) {
    if (!seen.insert(s.index).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "stream index " + std::to_string(s.index) + " appears twice");
    }
  }
  std::vector<StreamOutcome> outcomes;
  outcomes.reserve(stream.size());
  for (const auto& s : stream) {
    outcomes.push_back(process_sample(s.z, s.index, oracle, method, s.truth));
  }
  return outcomes;
}

}  // namespace almd
