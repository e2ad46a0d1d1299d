#include "almd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace almd {
namespace {

using nlohmann::json;

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void take_path(const json& j, const char* key, std::filesystem::path& out) {
  if (j.contains(key)) out = j.at(key).get<std::string>();
}

}  // namespace

const char* to_string(Setup s) { return s == Setup::kRandom ? "random" : "class-incremental"; }

Setup parse_setup(const std::string& s) {
  if (s == "random") return Setup::kRandom;
  if (s == "class-incremental") return Setup::kClassIncremental;
  throw Error(ErrorCode::kConfig, "unknown setup '" + s + "'");
}

ScoreKind parse_score_kind(const std::string& s) {
  if (s == "md" || s == "MD") return ScoreKind::kMd;
  if (s == "rmd" || s == "RMD") return ScoreKind::kRmd;
  throw Error(ErrorCode::kConfig, "unknown method '" + s + "'");
}

void RunConfig::validate() const {
  if (threshold && !std::isfinite(*threshold)) throw Error(ErrorCode::kConfig, "threshold must be finite");
  if (th == 0) throw Error(ErrorCode::kConfig, "th must be positive");
  if (!(ridge >= 0.0)) throw Error(ErrorCode::kConfig, "ridge must be non-negative");
  if (tasks == 0) throw Error(ErrorCode::kConfig, "tasks must be positive");
  if (!(split.id_class_fraction > 0.0 && split.id_class_fraction <= 1.0)) {
    throw Error(ErrorCode::kConfig, "id_class_fraction must lie in (0, 1]");
  }
}

RunConfig parse_config(const std::string& json_text, RunConfig cfg) {
  static const char* const kKnown[] = {
      "method", "threshold", "leverage_emerging", "th", "ridge", "seed", "setup", "tasks",
      "id_class_fraction", "app_per_class", "train_per_class", "embeddings", "test",
      "snapshot", "snapshot_out", "id_app", "ood_app", "out_dir", "report", "outcomes"};
  json j;
  try {
    j = json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
        throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
      }
    }
    if (j.contains("method")) cfg.method = parse_score_kind(j.at("method").get<std::string>());
    if (j.contains("threshold")) cfg.threshold = j.at("threshold").get<double>();
    take(j, "leverage_emerging", cfg.leverage_emerging);
    take(j, "th", cfg.th);
    if (j.contains("th")) cfg.th_explicit = true;
    take(j, "ridge", cfg.ridge);
    take(j, "seed", cfg.seed);
    if (j.contains("setup")) cfg.setup = parse_setup(j.at("setup").get<std::string>());
    take(j, "tasks", cfg.tasks);
    take(j, "id_class_fraction", cfg.split.id_class_fraction);
    take(j, "app_per_class", cfg.split.app_per_class);
    take(j, "train_per_class", cfg.split.train_per_class);
    take_path(j, "embeddings", cfg.embeddings);
    take_path(j, "test", cfg.test);
    take_path(j, "snapshot", cfg.snapshot);
    take_path(j, "snapshot_out", cfg.snapshot_out);
    take_path(j, "id_app", cfg.id_app);
    take_path(j, "ood_app", cfg.ood_app);
    take_path(j, "out_dir", cfg.out_dir);
    take_path(j, "report", cfg.report);
    take_path(j, "outcomes", cfg.outcomes);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed config: ") + e.what());
  }
  cfg.split.seed = cfg.seed;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const RunConfig& c) {
  json j = {
      {"method", to_string(c.method)},
      {"threshold", c.resolved_threshold()},
      {"leverage_emerging", c.leverage_emerging},
      {"th", c.th},
      {"ridge", c.ridge},
      {"seed", c.seed},
      {"setup", to_string(c.setup)},
      {"tasks", c.tasks},
      {"id_class_fraction", c.split.id_class_fraction},
      {"app_per_class", c.split.app_per_class},
      {"train_per_class", c.split.train_per_class},
  };
  for (const auto& [key, p] : {std::pair{"embeddings", &c.embeddings}, {"test", &c.test},
                               {"snapshot", &c.snapshot}, {"snapshot_out", &c.snapshot_out},
                               {"id_app", &c.id_app}, {"ood_app", &c.ood_app},
                               {"out_dir", &c.out_dir}, {"report", &c.report},
                               {"outcomes", &c.outcomes}}) {
    if (!p->empty()) j[key] = p->string();
  }
  return j.dump();
}

}  // namespace almd
