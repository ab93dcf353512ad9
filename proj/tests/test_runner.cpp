#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rws/config.hpp"
#include "rws/runner.hpp"

using nlohmann::json;
using rws::ExperimentConfig;
using rws::parse_config;
using rws::run;
using rws::RunStatus;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("rws_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    out[entry.path().filename().string()] = slurp(entry.path());
  return out;
}

ExperimentConfig small_config(const std::string& out_dir,
                              std::uint64_t seed = 7) {
  return parse_config(
      "master_seed=" + std::to_string(seed) + "\n" +
      "levels=2,3,4\n"
      "T=1\n"
      "n_paths=400\n"
      "functional=identity\n"
      "threads=2\n"
      "n_draws=20000\n"
      "dump_paths=2\n"
      "out_dir=" + out_dir + "\n" +
      "[martingale-test]\nn_paths=1600\nlevel=2\n"
      "[counterexample]\nn_paths=6500\nlevel=2\n"
      "[covariation]\nn_paths=4000\nfunctionals=identity,compensated_square\n"
      "[derivative-rates]\nn_paths=300\n"
      "[jump-bound]\nlevel=2\nn_paths=25\ndt=1e-4\n");
}

}  // namespace

TEST_CASE("martingale-test subcommand writes outputs and passes") {
  TempDir tmp("mart");
  const auto cfg = small_config(tmp.path.string());
  std::ostringstream log;
  CHECK(run("martingale-test", cfg, log) == RunStatus::kOk);
  CHECK(fs::exists(tmp.path / "martingale_bins.csv"));
  CHECK(fs::exists(tmp.path / "summary.json"));
  CHECK(fs::exists(tmp.path / "manifest.json"));
  const json summary = json::parse(slurp(tmp.path / "summary.json"));
  CHECK(summary["verdicts"]["martingale-test"] == true);
  CHECK(summary["results"]["martingale-test"]["functional"] == "identity");
}

TEST_CASE("martingale-test on the square functional exits 1") {
  TempDir tmp("martfail");
  auto cfg = parse_config(
      "master_seed=5\nlevels=2\nT=1\nn_paths=6500\n"
      "functional=compensated_square\nthreads=2\nout_dir=" +
      tmp.path.string() + "\n");
  std::ostringstream log;
  CHECK(run("martingale-test", cfg, log) == RunStatus::kCheckFailed);
  const json summary = json::parse(slurp(tmp.path / "summary.json"));
  CHECK(summary["verdicts"]["martingale-test"] == false);
}

TEST_CASE("counterexample subcommand recovers the line and exits 0") {
  TempDir tmp("cex");
  const auto cfg = small_config(tmp.path.string(), 7);
  std::ostringstream log;
  CHECK(run("counterexample", cfg, log) == RunStatus::kOk);
  const json summary = json::parse(slurp(tmp.path / "summary.json"));
  const auto& r = summary["results"]["counterexample"];
  CHECK(r["martingale_rejected"] == true);
  CHECK(std::fabs(r["slope"].get<double>() + 1.0) < 0.05);
}

TEST_CASE("refusals exit 2 without outputs") {
  TempDir tmp("refuse");
  // Too few paths for the per-bin occupancy refusal.
  auto cfg = parse_config(
      "master_seed=5\nlevels=2\nT=1\nn_paths=3\nfunctional=identity\n"
      "out_dir=" + tmp.path.string() + "\n");
  std::ostringstream log;
  CHECK(run("martingale-test", cfg, log) == RunStatus::kInvalid);
  CHECK(log.str().find("refused") != std::string::npos);
  CHECK(!fs::exists(tmp.path / "summary.json"));
  CHECK(run("no-such-subcommand", cfg, log) == RunStatus::kInvalid);
}

TEST_CASE("derivative-rates on a functional without closed form refuses") {
  TempDir tmp("deriv");
  auto cfg = parse_config(
      "master_seed=5\nlevels=2,3,4\nT=1\nn_paths=50\n"
      "functional=identity\nfunctionals=generic_call\nout_dir=" +
      tmp.path.string() + "\n");
  std::ostringstream log;
  CHECK(run("derivative-rates", cfg, log) == RunStatus::kInvalid);
}

TEST_CASE("sample-exit and simulate pass at desk scale") {
  TempDir tmp("se");
  const auto cfg = small_config(tmp.path.string());
  std::ostringstream log;
  CHECK(run("sample-exit", cfg, log) == RunStatus::kOk);
  CHECK(run("simulate", cfg, log) == RunStatus::kOk);
  CHECK(fs::exists(tmp.path / "exit_curve.csv"));
  CHECK(fs::exists(tmp.path / "simulate_stats.csv"));
  CHECK(fs::exists(tmp.path / "skeleton_p0.csv"));
  CHECK(fs::exists(tmp.path / "skeleton_p1.csv"));
}

TEST_CASE("full run is reproducible byte for byte") {
  TempDir tmp1("rep1");
  TempDir tmp2("rep2");
  std::ostringstream log;

  const auto cfg1 = small_config(tmp1.path.string());
  CHECK(run("all", cfg1, log) == RunStatus::kOk);
  const auto cfg2 = small_config(tmp2.path.string());
  CHECK(run("all", cfg2, log) == RunStatus::kOk);

  auto files1 = dir_contents(tmp1.path);
  auto files2 = dir_contents(tmp2.path);
  REQUIRE(files1.size() == files2.size());
  for (const auto& [name, content] : files1) {
    if (name == "manifest.json") continue;  // wall clock differs
    CHECK(content == files2[name]);
  }
  // Manifests agree on everything except the wall clock.
  json m1 = json::parse(files1["manifest.json"]);
  json m2 = json::parse(files2["manifest.json"]);
  m1.erase("wall_clock_seconds");
  m2.erase("wall_clock_seconds");
  CHECK(m1 == m2);
}

TEST_CASE("changing the seed changes outputs but not verdicts") {
  TempDir tmp1("seed1");
  TempDir tmp2("seed2");
  std::ostringstream log;
  CHECK(run("martingale-test", small_config(tmp1.path.string(), 100), log) ==
        RunStatus::kOk);
  CHECK(run("martingale-test", small_config(tmp2.path.string(), 101), log) ==
        RunStatus::kOk);
  CHECK(slurp(tmp1.path / "martingale_bins.csv") !=
        slurp(tmp2.path / "martingale_bins.csv"));
  const json s1 = json::parse(slurp(tmp1.path / "summary.json"));
  const json s2 = json::parse(slurp(tmp2.path / "summary.json"));
  CHECK(s1["verdicts"] == s2["verdicts"]);
}
