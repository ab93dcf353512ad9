// Command-line runner: reproducible experiments over the embedded
// random-walk scheme. Subcommands map one-to-one to the diagnostics layer;
// outputs are plot-ready CSV tables plus a JSON summary and manifest.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rws/config.hpp"
#include "rws/runner.hpp"
#include "rws/version.hpp"

namespace {

struct Overrides {
  std::optional<std::string> seed, levels, horizon, n_paths, functional,
      functionals, strike, inner_count, out_dir, threads, level, bins,
      z_threshold, dt, grid_tolerance, n_draws, cov_target, max_steps,
      dump_paths;
};

void append_override(std::string& text, const char* key,
                     const std::optional<std::string>& value) {
  if (value) text += std::string(key) + "=" + *value + "\n";
}

// Flags are appended after the config file, so they override global keys;
// for a single subcommand they are also appended to its section so they beat
// section entries from the file.
std::string build_config_text(const std::string& file_text,
                              const std::string& subcommand,
                              const Overrides& ov) {
  std::string text;
  if (const char* env = std::getenv("RWS_OUT_DIR"))
    text += std::string("out_dir=") + env + "\n";
  text += file_text;
  if (!text.empty() && text.back() != '\n') text += "\n";
  text += "[global]\n";  // the file may end inside a section

  std::string globals;
  append_override(globals, "master_seed", ov.seed);
  append_override(globals, "levels", ov.levels);
  append_override(globals, "T", ov.horizon);
  append_override(globals, "n_paths", ov.n_paths);
  append_override(globals, "functional", ov.functional);
  append_override(globals, "functionals", ov.functionals);
  append_override(globals, "K", ov.strike);
  append_override(globals, "mc_inner_count", ov.inner_count);
  append_override(globals, "out_dir", ov.out_dir);
  append_override(globals, "threads", ov.threads);
  append_override(globals, "level", ov.level);
  append_override(globals, "bins", ov.bins);
  append_override(globals, "z_threshold", ov.z_threshold);
  append_override(globals, "dt", ov.dt);
  append_override(globals, "grid_tolerance", ov.grid_tolerance);
  append_override(globals, "n_draws", ov.n_draws);
  append_override(globals, "cov_target", ov.cov_target);
  append_override(globals, "max_steps", ov.max_steps);
  append_override(globals, "dump_paths", ov.dump_paths);
  text += globals;

  if (subcommand != "all") {
    std::string sect;
    append_override(sect, "levels", ov.levels);
    append_override(sect, "n_paths", ov.n_paths);
    append_override(sect, "functional", ov.functional);
    append_override(sect, "functionals", ov.functionals);
    append_override(sect, "K", ov.strike);
    append_override(sect, "mc_inner_count", ov.inner_count);
    append_override(sect, "level", ov.level);
    append_override(sect, "bins", ov.bins);
    append_override(sect, "z_threshold", ov.z_threshold);
    append_override(sect, "dt", ov.dt);
    append_override(sect, "grid_tolerance", ov.grid_tolerance);
    append_override(sect, "n_draws", ov.n_draws);
    append_override(sect, "cov_target", ov.cov_target);
    append_override(sect, "dump_paths", ov.dump_paths);
    if (!sect.empty()) text += "[" + subcommand + "]\n" + sect;
  }
  return text;
}

constexpr const char* kDefaults =
    "master_seed=1\n"
    "levels=2,3,4,5\n"
    "T=1\n"
    "n_paths=10000\n"
    "functional=identity\n"
    "[martingale-test]\n"
    "level=3\n"
    "n_paths=1600\n"
    "[counterexample]\n"
    "level=2\n"
    "n_paths=6500\n"
    "[jump-bound]\n"
    "level=3\n"
    "n_paths=1000\n";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedded random-walk scheme experiments"};
  app.set_version_flag("--version", rws::kVersion);
  app.require_subcommand(1);

  std::string config_file;
  Overrides ov;
  std::string chosen;

  for (const auto& name : rws::known_subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->callback([&chosen, name] { chosen = name; });
    sub->add_option("--config", config_file, "config file (key=value lines)");
    auto opt = [sub](const char* flag, std::optional<std::string>& slot,
                     const char* help) {
      sub->add_option_function<std::string>(
          flag, [&slot](const std::string& v) { slot = v; }, help);
    };
    opt("--seed", ov.seed, "master seed");
    opt("--levels", ov.levels, "comma-separated levels k");
    opt("--T", ov.horizon, "time horizon");
    opt("--n-paths", ov.n_paths, "Monte Carlo paths");
    opt("--functional", ov.functional, "functional name");
    opt("--functionals", ov.functionals, "comma-separated functional names");
    opt("--K", ov.strike, "strike");
    opt("--inner-count", ov.inner_count, "nested Monte Carlo budget");
    opt("--out", ov.out_dir, "output directory");
    opt("--threads", ov.threads, "worker threads (0 = hardware)");
    opt("--level", ov.level, "single level k");
    opt("--bins", ov.bins, "duration-quantile bins");
    opt("--z-threshold", ov.z_threshold, "bin z-score threshold");
    opt("--dt", ov.dt, "fine grid step");
    opt("--grid-tolerance", ov.grid_tolerance, "jump-bound grid tolerance");
    opt("--n-draws", ov.n_draws, "exit-time draws");
    opt("--cov-target", ov.cov_target, "covariation target override");
    opt("--max-steps", ov.max_steps, "per-path step cap");
    opt("--dump-paths", ov.dump_paths, "skeleton CSV dumps");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::string file_text = kDefaults;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) {
      std::cerr << "cannot read config file '" << config_file << "'\n";
      return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    file_text = ss.str();
  }

  try {
    const rws::ExperimentConfig cfg =
        rws::parse_config(build_config_text(file_text, chosen, ov));
    return static_cast<int>(rws::run(chosen, cfg, std::cout));
  } catch (const rws::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
