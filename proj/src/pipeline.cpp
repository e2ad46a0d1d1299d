#include "almd/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace almd {

RunResult run_pipeline(ModelSnapshot start, const DatasetSplit& split, const RunOptions& options) {
  StreamPlan plan = options.setup == Setup::kRandom
                    ? build_random_stream(split, options.seed)
                    : build_class_incremental_stream(split, options.tasks, options.seed);
  const std::vector<StreamSample> stream = materialize(split, plan);
  const DatasetOracle oracle(split);
  Engine engine(std::move(start));
  RunReport report;
  std::vector<StreamOutcome> all;

  double seconds = 0.0;
  const auto& starts = plan.task_starts;
  for (std::size_t t = 0; t < starts.size(); ++t) {
    const std::size_t begin = starts[t];
    const std::size_t end = t + 1 < starts.size() ? starts[t + 1] : stream.size();
    const std::vector<StreamSample> slice(stream.begin() + static_cast<std::ptrdiff_t>(begin),
                                          stream.begin() + static_cast<std::ptrdiff_t>(end));
    const auto t0 = std::chrono::steady_clock::now();
    auto outcomes = engine.run_stream(slice, oracle, options.method);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    TaskCheckpoint cp;
    cp.task = t;
    cp.samples_seen = end;
    cp.task_tally = tally(outcomes);
    cp.task_asks = count_asks(outcomes);
    cp.classes_known = engine.registry().count(ClassSet::kAll);
    cp.classes_learned = engine.registry().count(ClassSet::kWellLearned);
    if (options.test != nullptr && !options.test->records.empty()) {
      cp.accuracy = evaluate_accuracy(engine.registry(), engine.shared(), *options.test);
    }
    report.checkpoints.push_back(std::move(cp));
    all.insert(all.end(), outcomes.begin(), outcomes.end());
  }

  report.detection = tally(all);
  report.asks = count_asks(all);
  if (!report.checkpoints.empty()) report.accuracy = report.checkpoints.back().accuracy;
  return {std::move(plan), std::move(all), std::move(report), engine.snapshot(), seconds};
}

DatasetSplit split_from_app(LabeledEmbeddingSet id_app, LabeledEmbeddingSet ood_app,
                            LabeledEmbeddingSet test) {
  if (id_app.dim != ood_app.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "ID and OOD APP files differ in dimension");
  }
  DatasetSplit s;
  s.id_classes = id_app.classes();
  s.ood_classes = ood_app.classes();
  s.id_app = std::move(id_app);
  s.ood_app = std::move(ood_app);
  s.test = std::move(test);
  return s;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void KeyValueReport::add(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void KeyValueReport::add(const std::string& key, double value) { add(key, format_double(value)); }
void KeyValueReport::add(const std::string& key, std::uint64_t value) {
  add(key, std::to_string(value));
}
void KeyValueReport::add(const std::string& key, bool value) {
  add(key, std::string(value ? "true" : "false"));
}

void KeyValueReport::add_accuracy(const std::string& prefix, const AccuracyReport& acc) {
  add(prefix + "accuracy_total", acc.total);
  add(prefix + "accuracy_id", acc.id);
  add(prefix + "accuracy_ood", acc.ood);
  add(prefix + "test_samples", acc.n_total);
  add(prefix + "test_samples_id", acc.n_id);
  add(prefix + "test_samples_ood", acc.n_ood);
}

std::string KeyValueReport::render() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

namespace {

void add_registry(KeyValueReport& r, const ClassRegistry& reg) {
  r.add("classes_initial", static_cast<std::uint64_t>(reg.count(ClassSet::kInitial)));
  r.add("classes_learned", static_cast<std::uint64_t>(reg.count(ClassSet::kWellLearned)));
  r.add("classes_emerging", static_cast<std::uint64_t>(reg.count(ClassSet::kEmerging)));
}

std::string join(const std::vector<ClassId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + std::to_string(ids[i]);
  return s;
}

}  // namespace

KeyValueReport make_run_report(const RunConfig& c, const RunResult& res) {
  KeyValueReport r;
  r.add("format", std::string("almd-report/1"));
  r.add("command", std::string("run"));
  r.add("method", std::string(to_string(c.method)));
  r.add("threshold", c.resolved_threshold());
  r.add("leverage_emerging", c.leverage_emerging);
  r.add("th", c.th);
  r.add("ridge", res.final_state.shared.ridge());
  r.add("seed", c.seed);
  r.add("setup", std::string(to_string(c.setup)));
  r.add("tasks", static_cast<std::uint64_t>(res.plan.task_starts.size()));
  r.add("samples", static_cast<std::uint64_t>(res.outcomes.size()));

  const auto& d = res.report.detection;
  r.add("tp", d.tp);
  r.add("fp", d.fp);
  r.add("fn", d.fn);
  r.add("tn", d.tn);
  r.add("precision", d.precision());
  r.add("recall", d.recall());
  r.add("f_score", d.f_score());
  r.add("f_score_degenerate", d.degenerate());
  r.add("asks", res.report.asks.asks);
  r.add("asks_yielding_new", res.report.asks.yielding_new);
  r.add("oracle_failures", res.report.asks.oracle_failures);
  add_registry(r, res.final_state.registry);
  r.add("accuracy_includes_emerging", true);
  if (res.report.accuracy) r.add_accuracy("", *res.report.accuracy);

  for (std::size_t t = 0; t < res.report.checkpoints.size(); ++t) {
    const auto& cp = res.report.checkpoints[t];
    const std::string p = "task." + std::to_string(t) + ".";
    r.add(p + "start", static_cast<std::uint64_t>(res.plan.task_starts[t]));
    r.add(p + "samples_seen", static_cast<std::uint64_t>(cp.samples_seen));
    r.add(p + "ood_classes", join(res.plan.task_classes[t]));
    r.add(p + "f_score", cp.task_tally.f_score());
    r.add(p + "asks", cp.task_asks.asks);
    r.add(p + "classes_known", static_cast<std::uint64_t>(cp.classes_known));
    r.add(p + "classes_learned", static_cast<std::uint64_t>(cp.classes_learned));
    if (cp.accuracy) r.add_accuracy(p, *cp.accuracy);
  }
  return r;
}

KeyValueReport make_eval_report(const ModelSnapshot& snapshot, const AccuracyReport& acc) {
  KeyValueReport r;
  r.add("format", std::string("almd-report/1"));
  r.add("command", std::string("eval"));
  r.add("th", snapshot.registry.threshold());
  r.add("ridge", snapshot.shared.ridge());
  add_registry(r, snapshot.registry);
  r.add("accuracy_includes_emerging", true);
  r.add_accuracy("", acc);
  return r;
}

std::string render_outcome_log(const std::vector<StreamOutcome>& outcomes) {
  std::ostringstream os;
  os << "index\ttruth\tverdict\treason\tpredicted\tconfidence\tasked\toracle_label\tmutation"
        "\tground_truth_ood\toracle_failed\n";
  for (const auto& o : outcomes) {
    os << o.index << '\t' << (o.truth ? std::to_string(*o.truth) : "-") << '\t'
       << to_string(o.decision.verdict) << '\t' << to_string(o.decision.reason) << '\t'
       << o.decision.predicted << '\t' << format_double(o.decision.confidence) << '\t'
       << (o.asked ? 1 : 0) << '\t' << (o.oracle_label ? std::to_string(*o.oracle_label) : "-")
       << '\t' << to_string(o.mutation) << '\t' << (o.ground_truth_ood ? 1 : 0) << '\t'
       << (o.oracle_failed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace almd
