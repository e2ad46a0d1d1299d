#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "almd/io.hpp"
#include "almd/types.hpp"

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() : dir(fs::temp_directory_path() / "almd_cli_test") {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string at(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(ALMD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> parse_report(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

TEST_CASE("synth -> split -> fit -> run -> eval pipeline") {
  Workspace w;
  const auto log = w.dir / "log.txt";
  REQUIRE(run("synth --classes 20 --dim 8 --spread 10 --train-per-class 300 --test-per-class 40 "
              "--seed 5 --out " + w.at("train.almd") + " --test-out " + w.at("test.almd"),
              log) == 0);
  CHECK(slurp(log).find("seed=5") != std::string::npos);
  REQUIRE(run("split --embeddings " + w.at("train.almd") + " --out-dir " + w.at("split") +
                  " --seed 5 --train-per-class 200",
              log) == 0);
  CHECK(fs::exists(w.dir / "split" / "manifest.json"));
  REQUIRE(run("fit --embeddings " + w.at("split/id_train.almd") + " --snapshot-out " +
                  w.at("init.alms"),
              log) == 0);

  REQUIRE(run("eval --snapshot " + w.at("init.alms") + " --test " + w.at("test.almd") +
                  " --report " + w.at("eval0.txt"),
              log) == 0);
  const auto eval0 = parse_report(slurp(w.dir / "eval0.txt"));
  CHECK(eval0.at("accuracy_ood") == "0");
  CHECK(std::stod(eval0.at("accuracy_id")) > 0.95);

  const std::string run_args = "run --snapshot " + w.at("init.alms") + " --id-app " +
                               w.at("split/id_app.almd") + " --ood-app " +
                               w.at("split/ood_app.almd") + " --test " + w.at("test.almd") +
                               " --threshold 0.25 --seed 5";
  REQUIRE(run(run_args + " --report " + w.at("r1.txt") + " --outcomes " + w.at("o1.tsv") +
                  " --snapshot-out " + w.at("after.alms"),
              log) == 0);
  REQUIRE(run(run_args + " --report " + w.at("r2.txt") + " --outcomes " + w.at("o2.tsv"), log) == 0);
  const auto r1 = slurp(w.dir / "r1.txt");
  CHECK(r1 == slurp(w.dir / "r2.txt"));
  CHECK(slurp(w.dir / "o1.tsv") == slurp(w.dir / "o2.tsv"));
  const auto kv = parse_report(r1);
  for (const char* key : {"f_score", "asks", "accuracy_total", "accuracy_id", "accuracy_ood",
                          "asks_yielding_new", "precision", "recall"}) {
    CHECK(kv.contains(key));
  }
  CHECK(std::stod(kv.at("accuracy_ood")) > 0.5);

  REQUIRE(run("eval --snapshot " + w.at("after.alms") + " --test " + w.at("test.almd"), log) == 0);
  CHECK(parse_report(slurp(log)).at("accuracy_total") == kv.at("accuracy_total"));

  // Class-incremental arrival through a config file; a flag overrides it.
  std::ofstream(w.dir / "cfg.json") << R"({"setup": "class-incremental", "tasks": 5, "threshold": 9})";
  REQUIRE(run(run_args + " --config " + w.at("cfg.json"), log) == 0);
  const auto ci = parse_report(slurp(log));
  CHECK(ci.at("setup") == "class-incremental");
  CHECK(ci.at("threshold") == "0.25");
  CHECK(ci.contains("task.4.f_score"));
}

TEST_CASE("th sweep direction through the CLI") {
  Workspace w;
  const auto log = w.dir / "log.txt";
  REQUIRE(run("synth --classes 20 --dim 8 --spread 10 --train-per-class 300 --test-per-class 40 "
              "--seed 9 --out " + w.at("train.almd") + " --test-out " + w.at("test.almd"),
              log) == 0);
  REQUIRE(run("split --embeddings " + w.at("train.almd") + " --out-dir " + w.at("s") +
                  " --seed 9 --train-per-class 200",
              log) == 0);
  REQUIRE(run("fit --embeddings " + w.at("s/id_train.almd") + " --snapshot-out " + w.at("i.alms"), log) == 0);
  auto sweep = [&](int th) {
    REQUIRE(run("run --snapshot " + w.at("i.alms") + " --id-app " + w.at("s/id_app.almd") +
                    " --ood-app " + w.at("s/ood_app.almd") + " --test " + w.at("test.almd") +
                    " --threshold 0.25 --th " + std::to_string(th),
                log) == 0);
    return parse_report(slurp(log));
  };
  const auto lo = sweep(10);
  const auto hi = sweep(50);
  CHECK(std::stoul(hi.at("asks")) >= std::stoul(lo.at("asks")));
  CHECK(std::stod(hi.at("accuracy_ood")) >= std::stod(lo.at("accuracy_ood")));
}

TEST_CASE("CLI error classes map to distinct exit codes") {
  Workspace w;
  const auto log = w.dir / "log.txt";
  CHECK(run("", log) == 2);
  CHECK(run("fit --bogus", log) == 2);
  CHECK(run("fit --embeddings " + w.at("missing.almd") + " --snapshot-out " + w.at("x.alms"), log) ==
        static_cast<int>(almd::ErrorCode::kIo));
  CHECK(run("fit --snapshot-out " + w.at("x.alms"), log) == static_cast<int>(almd::ErrorCode::kConfig));

  std::ofstream(w.dir / "bad.json") << "{ nope";
  CHECK(run("eval --config " + w.at("bad.json"), log) == static_cast<int>(almd::ErrorCode::kConfig));

  REQUIRE(run("synth --classes 4 --dim 3 --train-per-class 10 --test-per-class 2 --out " +
                  w.at("a.almd") + " --test-out " + w.at("b.almd"),
              log) == 0);
  auto bytes = almd::io::read_file(w.dir / "a.almd");
  bytes[30] ^= std::byte{1};
  almd::io::write_file_atomic(w.dir / "a.almd", bytes);
  CHECK(run("fit --embeddings " + w.at("a.almd") + " --snapshot-out " + w.at("x.alms"), log) ==
        static_cast<int>(almd::ErrorCode::kBadChecksum));

  REQUIRE(run("synth --classes 4 --dim 5 --train-per-class 10 --test-per-class 2 --out " +
                  w.at("c.almd") + " --test-out " + w.at("d.almd"),
              log) == 0);
  REQUIRE(run("fit --embeddings " + w.at("c.almd") + " --snapshot-out " + w.at("c.alms"), log) == 0);
  CHECK(run("eval --snapshot " + w.at("c.alms") + " --test " + w.at("b.almd"), log) ==
        static_cast<int>(almd::ErrorCode::kDimensionMismatch));
}
