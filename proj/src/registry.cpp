#include "almd/registry.hpp"

#include <string>

namespace almd {

bool belongs(ClassState state, ClassSet set) {
  switch (set) {
    case ClassSet::kInitial: return state == ClassState::kInitial;
    case ClassSet::kWellLearned: return state == ClassState::kWellLearned;
    case ClassSet::kEmerging: return state == ClassState::kEmerging;
    case ClassSet::kPlus: return state != ClassState::kEmerging;
    case ClassSet::kNew: return state != ClassState::kInitial;
    case ClassSet::kAll: return true;
  }
  return false;
}

ClassRegistry::ClassRegistry(std::uint64_t threshold) : threshold_(threshold) {
  if (threshold_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "well-learned threshold must be positive");
  }
}

ClassRegistry::ClassRegistry(std::vector<ClassPrototype> prototypes, std::uint64_t threshold)
    : ClassRegistry(threshold) {
  for (auto& p : prototypes) {
    if (p.state != ClassState::kInitial) {
      const bool learned = p.count >= threshold_;
      if (learned != (p.state == ClassState::kWellLearned)) {
        throw Error(ErrorCode::kProtocol,
                    "class " + std::to_string(p.id) + " state disagrees with its count");
      }
    }
    const ClassId id = p.id;
    if (!prototypes_.emplace(id, std::move(p)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate class id " + std::to_string(id));
    }
  }
}

const ClassPrototype* ClassRegistry::find(ClassId id) const {
  auto it = prototypes_.find(id);
  return it == prototypes_.end() ? nullptr : &it->second;
}

bool ClassRegistry::in(ClassId id, ClassSet set) const {
  const auto* p = find(id);
  return p != nullptr && belongs(p->state, set);
}

PrototypeRefs ClassRegistry::select(ClassSet set) const {
  PrototypeRefs out;
  out.reserve(prototypes_.size());
  for (const auto& [id, p] : prototypes_) {
    if (belongs(p.state, set)) out.push_back(&p);
  }
  return out;
}

std::size_t ClassRegistry::count(ClassSet set) const {
  std::size_t n = 0;
  for (const auto& [id, p] : prototypes_) n += belongs(p.state, set) ? 1 : 0;
  return n;
}

void ClassRegistry::put(ClassPrototype proto) {
  if (proto.state == ClassState::kInitial) {
    throw Error(ErrorCode::kProtocol, "cannot add an initial class after deployment");
  }
  auto it = prototypes_.find(proto.id);
  if (it != prototypes_.end() && it->second.state == ClassState::kInitial) {
    throw Error(ErrorCode::kProtocol,
                "class " + std::to_string(proto.id) + " is an initial class and is frozen");
  }
  const ClassId id = proto.id;
  prototypes_.insert_or_assign(id, std::move(proto));
}

}  // namespace almd
