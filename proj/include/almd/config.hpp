#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "almd/harness.hpp"
#include "almd/scorer.hpp"

namespace almd {

enum class Setup { kRandom, kClassIncremental };
const char* to_string(Setup s);
Setup parse_setup(const std::string& s);
ScoreKind parse_score_kind(const std::string& s);

/// Resolved run configuration. Precedence is CLI flag, then config file,
/// then the built-in defaults below.
struct RunConfig {
  ScoreKind method = ScoreKind::kMd;
  std::optional<double> threshold;  // unset: per-method default
  bool leverage_emerging = true;
  std::uint64_t th = kDefaultWellLearnedThreshold;
  bool th_explicit = false;  // set by a flag or config key rather than defaulted
  double ridge = kDefaultRidge;
  std::uint64_t seed = 0;
  Setup setup = Setup::kRandom;
  std::size_t tasks = kDefaultTasks;
  SplitSpec split;

  std::filesystem::path embeddings;
  std::filesystem::path test;
  std::filesystem::path snapshot;
  std::filesystem::path snapshot_out;
  std::filesystem::path id_app;
  std::filesystem::path ood_app;
  std::filesystem::path out_dir;
  std::filesystem::path report;
  std::filesystem::path outcomes;

  double resolved_threshold() const { return threshold.value_or(default_threshold(method)); }
  ScoreMethod score_method() const { return {method, resolved_threshold(), leverage_emerging}; }

  void validate() const;
};

/// Overlays the keys present in a JSON object file onto `base`. Unknown keys
/// are rejected.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
RunConfig parse_config(const std::string& json_text, RunConfig base = {});

/// Every resolved field as a flat JSON object, for echoing.
std::string dump_config(const RunConfig& config);

}  // namespace almd
