// almd: fit / run / eval / synth / split over embedding files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "almd/io.hpp"
#include "almd/pipeline.hpp"

namespace fs = std::filesystem;
using namespace almd;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitUnexpected = 1;

// Flags shared by every subcommand. Unset flags leave the config-file or
// default value in place.
struct Overrides {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<double> threshold;
  bool no_emerging = false;
  std::optional<std::uint64_t> th;
  std::optional<double> ridge;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> setup;
  std::optional<std::size_t> tasks;
  std::optional<double> id_fraction;
  std::optional<std::size_t> app_per_class;
  std::optional<std::size_t> train_per_class;
  std::optional<std::string> embeddings, test, snapshot, snapshot_out, id_app, ood_app, out_dir,
      report, outcomes;

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) c = load_config(config_path, c);
    if (method) c.method = parse_score_kind(*method);
    if (threshold) c.threshold = *threshold;
    if (no_emerging) c.leverage_emerging = false;
    if (th) {
      c.th = *th;
      c.th_explicit = true;
    }
    if (ridge) c.ridge = *ridge;
    if (seed) c.seed = *seed;
    if (setup) c.setup = parse_setup(*setup);
    if (tasks) c.tasks = *tasks;
    if (id_fraction) c.split.id_class_fraction = *id_fraction;
    if (app_per_class) c.split.app_per_class = *app_per_class;
    if (train_per_class) c.split.train_per_class = *train_per_class;
    c.split.seed = c.seed;
    auto path = [](const std::optional<std::string>& s, fs::path& out) {
      if (s) out = *s;
    };
    path(embeddings, c.embeddings);
    path(test, c.test);
    path(snapshot, c.snapshot);
    path(snapshot_out, c.snapshot_out);
    path(id_app, c.id_app);
    path(ood_app, c.ood_app);
    path(out_dir, c.out_dir);
    path(report, c.report);
    path(outcomes, c.outcomes);
    c.validate();
    return c;
  }
};

void require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw Error(ErrorCode::kConfig, std::string("missing required --") + flag);
}

void echo(const char* command, const RunConfig& c) {
  std::cout << "command=" << command << "\n"
            << "config=" << dump_config(c) << "\n"
            << "seed=" << c.seed << "\n";
}

void emit_report(const RunConfig& c, const KeyValueReport& report) {
  const std::string text = report.render();
  if (!c.report.empty()) io::write_text_atomic(c.report, text);
  std::cout << text;
}

int cmd_synth(const RunConfig& c, const SyntheticSpec& base, std::size_t train_per_class,
              std::size_t test_per_class) {
  require_path(c.embeddings, "embeddings");
  SyntheticSpec spec = base;
  spec.seed = c.seed;
  const auto world = make_world(spec);
  auto all = sample_world(world, train_per_class + test_per_class, c.seed);
  auto [train, test] = hold_out(all, test_per_class);
  io::write_embeddings(c.embeddings, train);
  std::cout << "wrote " << c.embeddings << " records=" << train.records.size() << "\n";
  if (!c.test.empty()) {
    io::write_embeddings(c.test, test);
    std::cout << "wrote " << c.test << " records=" << test.records.size() << "\n";
  }
  return 0;
}

int cmd_split(const RunConfig& c) {
  require_path(c.embeddings, "embeddings");
  require_path(c.out_dir, "out-dir");
  const auto data = io::read_embeddings(c.embeddings);
  const auto s = split(data, c.split);
  fs::create_directories(c.out_dir);
  io::write_embeddings(c.out_dir / "id_train.almd", s.id_train);
  io::write_embeddings(c.out_dir / "id_app.almd", s.id_app);
  io::write_embeddings(c.out_dir / "ood_app.almd", s.ood_app);

  nlohmann::json manifest = {
      {"format", "almd-split-manifest/1"},
      {"source", c.embeddings.string()},
      {"seed", c.split.seed},
      {"prng", "splitmix64"},
      {"id_class_fraction", c.split.id_class_fraction},
      {"train_per_class", c.split.train_per_class},
      {"app_per_class", c.split.app_per_class},
      {"id_classes", s.id_classes},
      {"ood_classes", s.ood_classes},
      {"files",
       {{"id_train", {{"path", "id_train.almd"}, {"records", s.id_train.records.size()}}},
        {"id_app", {{"path", "id_app.almd"}, {"records", s.id_app.records.size()}}},
        {"ood_app", {{"path", "ood_app.almd"}, {"records", s.ood_app.records.size()}}}}},
  };
  io::write_text_atomic(c.out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "id_classes=" << s.id_classes.size() << "\nood_classes=" << s.ood_classes.size()
            << "\nid_train=" << s.id_train.records.size()
            << "\nid_app=" << s.id_app.records.size()
            << "\nood_app=" << s.ood_app.records.size() << "\n";
  return 0;
}

int cmd_fit(const RunConfig& c) {
  require_path(c.embeddings, "embeddings");
  require_path(c.snapshot_out, "snapshot-out");
  const auto data = io::read_embeddings(c.embeddings);
  std::vector<Vector> z;
  std::vector<ClassId> y;
  z.reserve(data.records.size());
  y.reserve(data.records.size());
  for (const auto& r : data.records) {
    z.push_back(r.z);
    y.push_back(r.label);
  }
  auto snapshot = make_snapshot(fit_initial(z, y, c.ridge), c.th);
  io::write_snapshot(c.snapshot_out, snapshot);
  std::cout << "classes_initial=" << snapshot.registry.size() << "\ndim="
            << snapshot.shared.dim() << "\nsamples=" << z.size() << "\n";
  return 0;
}

// A snapshot's th can be changed only while it holds initial classes alone.
ModelSnapshot with_threshold(ModelSnapshot s, std::uint64_t th) {
  if (s.registry.threshold() == th) return s;
  if (s.registry.count(ClassSet::kNew) > 0) {
    throw Error(ErrorCode::kConfig, "cannot change th of a snapshot that already learned classes");
  }
  std::vector<ClassPrototype> protos;
  for (const auto& [id, p] : s.registry.prototypes()) protos.push_back(p);
  s.registry = ClassRegistry(std::move(protos), th);
  return s;
}

int cmd_run(const RunConfig& c) {
  require_path(c.snapshot, "snapshot");
  require_path(c.id_app, "id-app");
  require_path(c.ood_app, "ood-app");
  auto snapshot = io::read_snapshot(c.snapshot);
  if (c.th_explicit) snapshot = with_threshold(std::move(snapshot), c.th);
  RunConfig resolved = c;
  resolved.th = snapshot.registry.threshold();

  auto id_app = io::read_embeddings(c.id_app);
  auto ood_app = io::read_embeddings(c.ood_app);
  LabeledEmbeddingSet test;
  if (!c.test.empty()) test = io::read_embeddings(c.test);
  for (const auto* set : {&id_app, &ood_app}) {
    require_dim(set->dim, snapshot.shared.dim(), "APP embeddings");
  }
  if (!test.records.empty()) require_dim(test.dim, snapshot.shared.dim(), "test embeddings");

  const auto s = split_from_app(std::move(id_app), std::move(ood_app), std::move(test));
  RunOptions opts{resolved.score_method(), resolved.setup, resolved.tasks, resolved.seed,
                  s.test.records.empty() ? nullptr : &s.test};
  const auto result = run_pipeline(std::move(snapshot), s, opts);

  if (!c.snapshot_out.empty()) io::write_snapshot(c.snapshot_out, result.final_state);
  if (!c.outcomes.empty()) io::write_text_atomic(c.outcomes, render_outcome_log(result.outcomes));
  emit_report(resolved, make_run_report(resolved, result));
  return 0;
}

int cmd_eval(const RunConfig& c) {
  require_path(c.snapshot, "snapshot");
  require_path(c.test, "test");
  const auto snapshot = io::read_snapshot(c.snapshot);
  const auto test = io::read_embeddings(c.test);
  require_dim(test.dim, snapshot.shared.dim(), "test embeddings");
  const auto acc = evaluate_accuracy(snapshot.registry, snapshot.shared, test);
  emit_report(c, make_eval_report(snapshot, acc));
  return 0;
}

template <typename T>
void opt(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-deployment class-incremental learning with a frozen shared covariance"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file (flags take precedence)");
    opt(sub, "--seed", o.seed, "64-bit seed");
  };

  auto* synth = app.add_subcommand("synth", "Generate seeded Gaussian class embeddings");
  common(synth);
  SyntheticSpec synth_spec;
  std::size_t synth_train = 500, synth_test = 100;
  synth->add_option("--classes", synth_spec.num_classes, "number of classes");
  synth->add_option("--dim", synth_spec.dim, "embedding dimension");
  synth->add_option("--spread", synth_spec.spread, "radius of the class-mean sphere");
  synth->add_option("--min-eig", synth_spec.covariance.min_eigenvalue, "smallest covariance eigenvalue");
  synth->add_option("--max-eig", synth_spec.covariance.max_eigenvalue, "largest covariance eigenvalue");
  synth->add_option("--train-per-class", synth_train, "training records per class");
  synth->add_option("--test-per-class", synth_test, "held-out test records per class");
  opt(synth, "--out", o.embeddings, "training embedding file to write");
  opt(synth, "--test-out", o.test, "test embedding file to write");

  auto* split_cmd = app.add_subcommand("split", "Split embeddings into ID Train / ID APP / OOD APP");
  common(split_cmd);
  opt(split_cmd, "--embeddings", o.embeddings, "input embedding file");
  opt(split_cmd, "--out-dir", o.out_dir, "directory for split files and manifest");
  opt(split_cmd, "--id-fraction", o.id_fraction, "fraction of classes used as ID");
  opt(split_cmd, "--app-per-class", o.app_per_class, "APP samples per class");
  opt(split_cmd, "--train-per-class", o.train_per_class, "ID Train samples per class");

  auto* fit = app.add_subcommand("fit", "Fit the initial model from ID Train embeddings");
  common(fit);
  opt(fit, "--embeddings", o.embeddings, "ID Train embedding file");
  opt(fit, "--snapshot-out", o.snapshot_out, "snapshot file to write");
  opt(fit, "--ridge", o.ridge, "relative covariance ridge");
  opt(fit, "--th", o.th, "well-learned threshold");

  auto* run = app.add_subcommand("run", "Stream APP data through a deployed snapshot");
  common(run);
  opt(run, "--snapshot", o.snapshot, "input snapshot");
  opt(run, "--snapshot-out", o.snapshot_out, "updated snapshot to write");
  opt(run, "--id-app", o.id_app, "ID APP embedding file");
  opt(run, "--ood-app", o.ood_app, "OOD APP embedding file");
  opt(run, "--test", o.test, "test embeddings for accuracy (optional)");
  opt(run, "--method", o.method, "md or rmd");
  opt(run, "--threshold", o.threshold, "OOD confidence threshold");
  run->add_flag("--no-emerging", o.no_emerging, "disable the emerging-class proximity rule");
  opt(run, "--th", o.th, "well-learned threshold (only for snapshots without learned classes)");
  opt(run, "--setup", o.setup, "random or class-incremental");
  opt(run, "--tasks", o.tasks, "tasks for class-incremental arrival");
  opt(run, "--report", o.report, "report file to write");
  opt(run, "--outcomes", o.outcomes, "per-sample outcome log (TSV)");

  auto* eval = app.add_subcommand("eval", "Closed-set accuracy of a snapshot on test embeddings");
  common(eval);
  opt(eval, "--snapshot", o.snapshot, "snapshot to evaluate");
  opt(eval, "--test", o.test, "test embedding file");
  opt(eval, "--report", o.report, "report file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const RunConfig config = o.resolve();
    if (synth->parsed()) {
      echo("synth", config);
      return cmd_synth(config, synth_spec, synth_train, synth_test);
    }
    if (split_cmd->parsed()) {
      echo("split", config);
      return cmd_split(config);
    }
    if (fit->parsed()) {
      echo("fit", config);
      return cmd_fit(config);
    }
    if (run->parsed()) {
      echo("run", config);
      return cmd_run(config);
    }
    if (eval->parsed()) {
      echo("eval", config);
      return cmd_eval(config);
    }
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnexpected;
  }
  return kExitUsage;
}
