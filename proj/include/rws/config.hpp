#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rws {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed experiment configuration: required global keys, defaulted knobs and
// per-subcommand override sections. The text format is flat key=value lines
// with '#' comments and INI-style [subcommand] sections; unknown sections or
// keys are rejected, later assignments win.
struct ExperimentConfig {
  // required
  std::uint64_t master_seed = 0;
  std::vector<int> levels;
  double horizon = 0.0;  // key: T
  std::uint64_t n_paths = 0;
  std::string functional;

  // defaulted
  double strike = 0.0;  // key: K
  std::uint32_t mc_inner_count = 1000;
  std::string out_dir = "out";
  unsigned threads = 0;  // 0 = hardware
  std::uint64_t max_steps = 100000000;
  std::size_t bins = 10;
  double z_threshold = 4.0;
  double grid_dt = 1e-5;  // key: dt
  double grid_tolerance = 0.02;
  std::uint32_t dump_paths = 3;
  std::uint64_t n_draws = 100000;
  std::optional<double> cov_target;
  std::optional<int> level;
  std::vector<std::string> functionals;

  // validated raw section overrides
  std::map<std::string, std::map<std::string, std::string>> sections;

  // sorted echo of the effective key=value content; stable across runs
  std::string canonical_text;

  int effective_level() const { return level ? *level : levels.front(); }

  // Copy with one subcommand's section overrides applied.
  ExperimentConfig effective(const std::string& subcommand) const;
};

// Parse and validate. Empty input reports the missing required keys.
ExperimentConfig parse_config(const std::string& text);

const std::vector<std::string>& known_subcommands();
const std::vector<std::string>& known_functionals();

}  // namespace rws
