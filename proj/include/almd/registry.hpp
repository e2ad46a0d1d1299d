#pragma once

#include <map>
#include <vector>

#include "almd/gaussian.hpp"

namespace almd {

inline constexpr std::uint64_t kDefaultWellLearnedThreshold = 30;

/// Which slice of the class set a query ranges over.
enum class ClassSet {
  kInitial,      // C
  kWellLearned,  // C^L (post-deployment, promoted)
  kEmerging,     // C^E
  kPlus,         // C ∪ C^L
  kNew,          // C^L ∪ C^E
  kAll,          // C ∪ C^L ∪ C^E
};

using PrototypeRefs = std::vector<const ClassPrototype*>;

/// All class prototypes seen so far, keyed by id. The partition into C, C^L
/// and C^E is carried by each prototype's state.
class ClassRegistry {
 public:
  explicit ClassRegistry(std::uint64_t threshold = kDefaultWellLearnedThreshold);
  ClassRegistry(std::vector<ClassPrototype> prototypes, std::uint64_t threshold);

  std::uint64_t threshold() const { return threshold_; }
  std::size_t size() const { return prototypes_.size(); }
  bool empty() const { return prototypes_.empty(); }

  const ClassPrototype* find(ClassId id) const;
  bool contains(ClassId id) const { return find(id) != nullptr; }
  bool in(ClassId id, ClassSet set) const;

  /// Prototypes in `set`, ascending by class id.
  PrototypeRefs select(ClassSet set) const;
  std::size_t count(ClassSet set) const;

  const std::map<ClassId, ClassPrototype>& prototypes() const { return prototypes_; }

  /// Inserts or replaces a post-deployment prototype. INITIAL entries are
  /// only accepted through the constructor.
  void put(ClassPrototype proto);

  friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;

 private:
  std::uint64_t threshold_;
  std::map<ClassId, ClassPrototype> prototypes_;
};

bool belongs(ClassState state, ClassSet set);

}  // namespace almd
