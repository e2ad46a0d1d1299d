#include <doctest.h>

#include <map>
#include <stdexcept>

#include "almd/engine.hpp"
#include "almd/harness.hpp"
#include "almd/io.hpp"
#include "test_util.hpp"

using namespace almd;
using almd::test::proto;
using almd::test::vec;

namespace {

ModelSnapshot toy_snapshot(std::uint64_t th = 3) {
  return {ClassRegistry({proto(0, vec({0, 0}), ClassState::kInitial, 10),
                         proto(1, vec({10, 0}), ClassState::kInitial, 10)},
                        th),
          SharedGaussianModel(Matrix::Identity(2, 2), 0.0),
          BackgroundModel{vec({5, 0}), SharedGaussianModel(4.0 * Matrix::Identity(2, 2), 0.0)}};
}

struct World {
  DatasetSplit split;
  ModelSnapshot initial;
};

// 20 ID + 20 OOD synthetic classes, fitted on ID Train.
World synthetic_world(std::uint64_t seed, std::size_t classes = 40, std::size_t dim = 16) {
  SyntheticSpec spec;
  spec.num_classes = classes;
  spec.dim = dim;
  spec.spread = 8.0;
  spec.seed = seed;
  const auto data = synth_generate(spec, 150);
  SplitSpec ss;
  ss.seed = seed;
  ss.train_per_class = 100;
  ss.app_per_class = 50;
  auto s = split(data, ss);
  std::vector<Vector> z;
  std::vector<ClassId> y;
  for (const auto& r : s.id_train.records) {
    z.push_back(r.z);
    y.push_back(r.label);
  }
  return {std::move(s), make_snapshot(fit_initial(z, y), 30)};
}

class FailingOracle : public LabelOracle {
 public:
  ClassId label(std::size_t) const override { throw std::runtime_error("unreachable annotator"); }
};

}  // namespace

TEST_CASE("registry partitions classes by state") {
  ClassRegistry reg({proto(0, vec({0}), ClassState::kInitial, 5),
                     proto(1, vec({1}), ClassState::kInitial, 5)},
                    2);
  reg.put(proto(7, vec({2}), ClassState::kEmerging, 1));
  reg.put(proto(8, vec({3}), ClassState::kWellLearned, 2));
  CHECK(reg.count(ClassSet::kInitial) == 2);
  CHECK(reg.count(ClassSet::kEmerging) == 1);
  CHECK(reg.count(ClassSet::kWellLearned) == 1);
  CHECK(reg.count(ClassSet::kPlus) == 3);
  CHECK(reg.count(ClassSet::kNew) == 2);
  CHECK(reg.count(ClassSet::kAll) == 4);
  CHECK(reg.in(8, ClassSet::kPlus));
  CHECK_FALSE(reg.in(7, ClassSet::kPlus));
  CHECK_FALSE(reg.in(99, ClassSet::kAll));

  CHECK_THROWS_AS(reg.put(proto(0, vec({5}), ClassState::kEmerging, 1)), Error);
  CHECK_THROWS_AS(reg.put(proto(9, vec({5}), ClassState::kInitial, 1)), Error);
  CHECK_THROWS_AS(ClassRegistry(0), Error);
  CHECK_THROWS_AS(ClassRegistry({proto(4, vec({0}), ClassState::kEmerging, 5)}, 3), Error);
}

TEST_CASE("ID sample: no question, no mutation") {
  Engine engine(toy_snapshot());
  const test::TableOracle oracle({0});
  const auto out = engine.process_sample(vec({0.1, 0}), 0, oracle, ScoreMethod::md(), ClassId{0});
  CHECK(out.decision.verdict == Verdict::kId);
  CHECK_FALSE(out.asked);
  CHECK_FALSE(out.oracle_label.has_value());
  CHECK(out.mutation == Mutation::kNone);
  CHECK_FALSE(out.ground_truth_ood);
}

TEST_CASE("OOD sample labelled with an initial class costs an ask but changes nothing") {
  Engine engine(toy_snapshot());
  const auto before = engine.snapshot();
  const test::TableOracle oracle({0});
  const auto out = engine.process_sample(vec({3, 3}), 0, oracle, ScoreMethod::md(), ClassId{0});
  CHECK(out.decision.verdict == Verdict::kOod);
  CHECK(out.asked);
  CHECK(out.oracle_label == ClassId{0});
  CHECK(out.mutation == Mutation::kNone);
  CHECK(engine.snapshot() == before);
}

TEST_CASE("new class lifecycle: created, updated, promoted on the th-th sample, then ID") {
  Engine engine(toy_snapshot(3));
  const test::TableOracle oracle({42, 42, 42, 42});
  const auto a = engine.process_sample(vec({5, 8}), 0, oracle, ScoreMethod::md(), ClassId{42});
  CHECK(a.mutation == Mutation::kCreated);
  CHECK(a.ground_truth_ood);
  CHECK(engine.registry().find(42)->count == 1);
  CHECK(engine.registry().in(42, ClassSet::kEmerging));

  const auto b = engine.process_sample(vec({5, 8.5}), 1, oracle, ScoreMethod::md(), ClassId{42});
  CHECK(b.decision.reason == Reason::kNearEmerging);
  CHECK(b.mutation == Mutation::kUpdated);

  const auto c = engine.process_sample(vec({5, 7.5}), 2, oracle, ScoreMethod::md(), ClassId{42});
  CHECK(c.mutation == Mutation::kPromoted);
  CHECK(engine.registry().in(42, ClassSet::kWellLearned));
  CHECK(engine.registry().find(42)->mu.isApprox(vec({5, 8})));

  // Once promoted, a sample at the learned mean is ID and ground truth agrees.
  const auto d = engine.process_sample(vec({5, 8}), 3, oracle, ScoreMethod::md(), ClassId{42});
  CHECK(d.decision.verdict == Verdict::kId);
  CHECK(d.decision.predicted == 42);
  CHECK_FALSE(d.ground_truth_ood);
}

TEST_CASE("promotion with the default threshold happens on the 30th labelled sample") {
  Engine engine(toy_snapshot(30));
  std::vector<ClassId> labels(40, 77);
  const test::TableOracle oracle(labels);
  SplitMix64 rng(3);
  int promoted_at = -1;
  for (std::size_t i = 0; i < 30; ++i) {
    const auto out = engine.process_sample(vec({5, 20}) + 0.1 * test::random_vector(rng, 2), i,
                                           oracle, ScoreMethod::md(), ClassId{77});
    REQUIRE(out.asked);
    if (out.mutation == Mutation::kPromoted) promoted_at = static_cast<int>(i);
  }
  CHECK(promoted_at == 29);
  CHECK(engine.registry().find(77)->count == 30);
}

TEST_CASE("a well-learned class keeps absorbing samples flagged OOD") {
  ModelSnapshot s = toy_snapshot(2);
  s.registry.put(proto(9, vec({0, 10}), ClassState::kWellLearned, 2));
  Engine engine(std::move(s));
  const test::TableOracle oracle({9});
  const auto out = engine.process_sample(vec({0, 13}), 0, oracle, ScoreMethod::md(), ClassId{9});
  CHECK(out.decision.reason == Reason::kBelowThreshold);
  CHECK(out.mutation == Mutation::kUpdated);
  CHECK(engine.registry().find(9)->count == 3);
  CHECK(engine.registry().find(9)->mu.isApprox(vec({0, 11})));
}

TEST_CASE("oracle failure is recorded and flagged without mutating") {
  Engine engine(toy_snapshot());
  const auto before = engine.snapshot();
  const auto out = engine.process_sample(vec({3, 3}), 0, FailingOracle{}, ScoreMethod::md());
  CHECK(out.asked);
  CHECK(out.oracle_failed);
  CHECK(out.mutation == Mutation::kNone);
  CHECK_FALSE(out.oracle_label.has_value());
  CHECK(engine.snapshot() == before);
}

TEST_CASE("process_sample rejects mismatched dimensions") {
  Engine engine(toy_snapshot());
  const test::TableOracle oracle({0});
  CHECK_THROWS_AS(engine.process_sample(vec({1, 2, 3}), 0, oracle, ScoreMethod::md()), Error);
}

TEST_CASE("run_stream edge cases") {
  Engine engine(toy_snapshot());
  const auto before = engine.snapshot();
  const test::TableOracle oracle({0, 1});
  CHECK(engine.run_stream({}, oracle, ScoreMethod::md()).empty());
  CHECK(engine.snapshot() == before);

  const std::vector<StreamSample> dup = {{0, vec({0, 0}), 0}, {0, vec({10, 0}), 1}};
  CHECK_THROWS_AS(engine.run_stream(dup, oracle, ScoreMethod::md()), Error);

  // Initial-class samples near their means with a permissive threshold.
  const std::vector<StreamSample> easy = {{0, vec({0.01, 0}), 0}, {1, vec({10, 0.01}), 1}};
  const auto outs = engine.run_stream(easy, oracle, ScoreMethod::md(0.1));
  for (const auto& o : outs) {
    CHECK_FALSE(o.asked);
    CHECK(o.mutation == Mutation::kNone);
  }
}

TEST_CASE("replay audit: learned means are batch means of the samples routed to them") {
  auto w = synthetic_world(5);
  const auto plan = build_random_stream(w.split, 5);
  const auto stream = materialize(w.split, plan);
  const DatasetOracle oracle(w.split);
  Engine engine(w.initial);
  const auto outcomes = engine.run_stream(stream, oracle, ScoreMethod::md(0.2));

  std::map<std::size_t, const StreamSample*> by_index;
  for (const auto& s : stream) by_index[s.index] = &s;
  std::map<ClassId, Vector> sums;
  std::map<ClassId, std::uint64_t> counts;
  std::uint64_t asks = 0, ood = 0;
  for (const auto& o : outcomes) {
    asks += o.asked ? 1 : 0;
    ood += o.decision.verdict == Verdict::kOod ? 1 : 0;
    if (o.mutation == Mutation::kNone) continue;
    const auto& z = by_index.at(o.index)->z;
    auto [it, fresh] = sums.try_emplace(*o.oracle_label, Vector::Zero(z.size()));
    it->second += z;
    ++counts[*o.oracle_label];
  }
  CHECK(asks == ood);
  CHECK(!sums.empty());
  for (const auto& [id, p] : engine.registry().prototypes()) {
    if (p.state == ClassState::kInitial) {
      CHECK_FALSE(sums.contains(id));
      continue;
    }
    REQUIRE(counts.contains(id));
    CHECK(p.count == counts[id]);
    CHECK(test::rel_err(p.mu, sums[id] / static_cast<double>(counts[id])) <= 1e-9);
  }
}

TEST_CASE("no forgetting: distances to untouched classes are bit-identical") {
  auto w = synthetic_world(9);
  Engine engine(w.initial);
  SplitMix64 rng(4);
  std::vector<Vector> probes;
  for (int i = 0; i < 50; ++i) probes.push_back(test::random_vector(rng, 16, 6.0));
  auto distances = [&](const Engine& e) {
    std::vector<double> out;
    for (const auto* p : e.registry().select(ClassSet::kInitial)) {
      for (const auto& z : probes) out.push_back(mahalanobis(z, p->mu, e.shared()));
    }
    return out;
  };
  const auto before = distances(engine);
  const auto model_bytes = io::encode_model(engine.shared());
  const auto bg_bytes = io::encode_model(engine.background().model);

  const auto plan = build_random_stream(w.split, 1);
  engine.run_stream(materialize(w.split, plan), DatasetOracle(w.split), ScoreMethod::md(0.2));
  CHECK(engine.registry().count(ClassSet::kNew) > 0);
  CHECK(distances(engine) == before);
  CHECK(io::encode_model(engine.shared()) == model_bytes);
  CHECK(io::encode_model(engine.background().model) == bg_bytes);
}

TEST_CASE("monotone registry and determinism over a stream") {
  auto w = synthetic_world(13);
  const auto plan = build_random_stream(w.split, 2);
  const auto stream = materialize(w.split, plan);
  const DatasetOracle oracle(w.split);

  Engine a(w.initial);
  std::size_t known = a.registry().size();
  std::map<ClassId, std::uint64_t> last;
  std::vector<StreamOutcome> outs_a;
  for (const auto& s : stream) {
    outs_a.push_back(a.process_sample(s.z, s.index, oracle, ScoreMethod::md(0.2), s.truth));
    CHECK(a.registry().size() >= known);
    known = a.registry().size();
    for (const auto& [id, p] : a.registry().prototypes()) {
      CHECK(p.count >= last[id]);
      last[id] = p.count;
    }
  }
  Engine b(w.initial);
  CHECK(b.run_stream(stream, oracle, ScoreMethod::md(0.2)) == outs_a);
  CHECK(b.snapshot() == a.snapshot());
}

TEST_CASE("snapshot round trip and continuation equivalence") {
  auto w = synthetic_world(21);
  const auto plan = build_random_stream(w.split, 8);
  const auto stream = materialize(w.split, plan);
  const DatasetOracle oracle(w.split);
  const auto method = ScoreMethod::md(0.2);

  CHECK(io::decode_snapshot(io::encode_snapshot(w.initial)) == w.initial);

  Engine whole(w.initial);
  const auto expected = whole.run_stream(stream, oracle, method);

  const std::size_t cut = stream.size() / 3;
  const std::vector<StreamSample> first(stream.begin(), stream.begin() + cut);
  const std::vector<StreamSample> rest(stream.begin() + cut, stream.end());
  Engine part(w.initial);
  auto got = part.run_stream(first, oracle, method);
  const auto bytes = io::encode_snapshot(part.snapshot());
  const auto restored = io::decode_snapshot(bytes);
  CHECK(restored == part.snapshot());
  CHECK(restored.registry.count(ClassSet::kEmerging) > 0);
  CHECK(io::encode_snapshot(restored) == bytes);

  Engine resumed(restored);
  const auto tail = resumed.run_stream(rest, oracle, method);
  got.insert(got.end(), tail.begin(), tail.end());
  CHECK(got == expected);
  CHECK(resumed.snapshot() == whole.snapshot());
}
