#include "rws/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rws/diagnostics.hpp"
#include "rws/stats.hpp"
#include "rws/version.hpp"

namespace rws {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Collects output files in memory so the manifest can record a content hash
// of everything emitted.
class OutputSink {
 public:
  void add(const std::string& name, std::string content,
           std::string schema = {}) {
    files_[name] = std::move(content);
    if (!schema.empty()) schemas_[name] = std::move(schema);
  }

  json file_hashes() const {
    json j = json::object();
    for (const auto& [name, content] : files_)
      j[name] = "fnv1a64:" + hex64(fnv1a64(content));
    return j;
  }

  json schemas() const {
    json j = json::object();
    for (const auto& [name, schema] : schemas_) j[name] = schema;
    return j;
  }

  void write_all(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files_) {
      std::ofstream out(dir / name, std::ios::binary);
      if (!out)
        throw std::runtime_error("cannot open output file " +
                                 (dir / name).string());
      out << content;
    }
  }

 private:
  std::map<std::string, std::string> files_;
  std::map<std::string, std::string> schemas_;
};

// --------------------------------------------------------------------------
// sample-exit: draw moments, sampler/CDF agreement
// --------------------------------------------------------------------------

json run_sample_exit(const ExperimentConfig& cfg, OutputSink& sink,
                     bool& pass) {
  const int level = cfg.level.value_or(0);
  const UnitExitLaw law;
  const auto draws =
      pooled_exit_draws(law, level, cfg.n_draws, cfg.master_seed, cfg.threads);
  const SampleStats stats = summarize(draws);

  const double scale = std::ldexp(1.0, -2 * level);
  const double mean_target = scale;
  const double var_target = (2.0 / 3.0) * scale * scale;
  // Var(tau^2-ish): E(tau-1)^4 - Var(tau)^2 = 412/105 - 4/9 for the unit law.
  const double var_of_var = (412.0 / 105.0 - 4.0 / 9.0) * scale * scale *
                            scale * scale;
  const double n = static_cast<double>(stats.count);
  const double mean_z = (stats.mean - mean_target) / stats.std_error;
  const double var_z =
      (stats.variance - var_target) / std::sqrt(var_of_var / n);
  const double ks = ks_statistic(
      draws, [&](double x) { return 1.0 - law.survival(x / scale); });
  const double ks_limit = 3.2 / std::sqrt(n);

  const bool ok =
      std::fabs(mean_z) < 4.5 && std::fabs(var_z) < 4.5 && ks < ks_limit;
  pass = ok;

  // Plot-ready curve: exact vs empirical survival on a quantile grid.
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  std::string csv = "t,survival_exact,survival_empirical\n";
  for (int i = 1; i <= 39; ++i) {
    const double u = i / 40.0;
    const double t = law.inverse_survival(u) * scale;
    const auto above = sorted.end() -
                       std::upper_bound(sorted.begin(), sorted.end(), t);
    csv += fmt(t) + "," + fmt(u) + "," +
           fmt(static_cast<double>(above) / n) + "\n";
  }
  sink.add("exit_curve.csv", csv, "t,survival_exact,survival_empirical");

  json j;
  j["level"] = level;
  j["n_draws"] = stats.count;
  j["mean"] = stats.mean;
  j["mean_target"] = mean_target;
  j["mean_z"] = mean_z;
  j["variance"] = stats.variance;
  j["variance_target"] = var_target;
  j["variance_z"] = var_z;
  j["ks"] = ks;
  j["ks_limit"] = ks_limit;
  j["pass"] = ok;
  return j;
}

// --------------------------------------------------------------------------
// simulate: skeleton dumps + exact pathwise identities + Wald bound
// --------------------------------------------------------------------------

json run_simulate(const ExperimentConfig& cfg, OutputSink& sink, bool& pass) {
  const int level = cfg.effective_level();
  const UnitExitLaw law;
  const double step = std::ldexp(1.0, -level);

  std::vector<double> node_counts(cfg.n_paths);
  std::vector<double> brackets(cfg.n_paths);
  std::vector<double> max_devs(cfg.n_paths);
  std::vector<char> exact_ok(cfg.n_paths, 0);
  std::vector<std::string> dumps(std::min<std::uint64_t>(cfg.dump_paths,
                                                         cfg.n_paths));

  parallel_for(cfg.n_paths, cfg.threads, [&](std::uint64_t p) {
    UniformSource src(cfg.master_seed, StreamPurpose::kSkeleton,
                      static_cast<std::uint32_t>(level), p);
    SkeletonPath path =
        simulate_skeleton(level, cfg.horizon, src, law, cfg.max_steps);
    path.source = {cfg.master_seed, static_cast<std::uint32_t>(level), p};
    const std::size_t n_nodes = path.last_index();

    bool ok = path.times.front() == 0.0 && path.values.front() == 0.0;
    double dev = 0.0;
    for (std::size_t i = 1; i < path.times.size(); ++i) {
      ok = ok && path.times[i] > path.times[i - 1];
      dev = std::max(dev, std::fabs(std::fabs(path.values[i] -
                                              path.values[i - 1]) -
                                    step));
    }
    ok = ok && dev == 0.0;
    ok = ok && path.times[n_nodes] <= cfg.horizon &&
         path.times[n_nodes + 1] > cfg.horizon;
    const double bracket = bracket_walk(path, cfg.horizon);
    ok = ok && bracket == step * step * static_cast<double>(n_nodes);

    node_counts[p] = static_cast<double>(n_nodes);
    brackets[p] = bracket;
    max_devs[p] = dev;
    exact_ok[p] = ok ? 1 : 0;
    if (p < dumps.size()) {
      std::ostringstream os;
      write_csv(path, os);
      dumps[p] = os.str();
    }
  });

  bool all_exact = true;
  for (char c : exact_ok) all_exact = all_exact && c;

  // Wald bound: E[4^{-k} C_T] must sit in [T - 4^{-k}, T] up to CI width.
  const ConfidenceInterval ci = confidence_interval(brackets);
  const bool wald_ok = ci.mean >= cfg.horizon - step * step - ci.half_width &&
                       ci.mean <= cfg.horizon + ci.half_width;
  pass = all_exact && wald_ok;

  std::string csv = "path,nodes,bracket_at_T,max_step_dev\n";
  for (std::uint64_t p = 0; p < cfg.n_paths; ++p)
    csv += std::to_string(p) + "," +
           std::to_string(static_cast<std::uint64_t>(node_counts[p])) + "," +
           fmt(brackets[p]) + "," + fmt(max_devs[p]) + "\n";
  sink.add("simulate_stats.csv", csv, "path,nodes,bracket_at_T,max_step_dev");
  for (std::size_t p = 0; p < dumps.size(); ++p)
    sink.add("skeleton_p" + std::to_string(p) + ".csv", dumps[p],
             "n,time,sign,value");

  json j;
  j["level"] = level;
  j["n_paths"] = cfg.n_paths;
  j["exact_identities"] = all_exact;
  j["mean_bracket"] = ci.mean;
  j["bracket_ci_half"] = ci.half_width;
  j["wald_lo"] = cfg.horizon - step * step;
  j["wald_hi"] = cfg.horizon;
  j["wald_ok"] = wald_ok;
  j["mean_nodes"] = summarize(node_counts).mean;
  j["pass"] = pass;
  return j;
}

// --------------------------------------------------------------------------
// martingale-test
// --------------------------------------------------------------------------

std::string bins_csv(const TestReport& report) {
  std::string csv = "bin,dt_lo,dt_hi,count,mean_dt,mean_jump,se_jump,z\n";
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const BinStat& bin = report.bins[b];
    csv += std::to_string(b) + "," + fmt(bin.duration_lo) + "," +
           fmt(bin.duration_hi) + "," + std::to_string(bin.count) + "," +
           fmt(bin.mean_duration) + "," + fmt(bin.mean_jump) + "," +
           fmt(bin.se_jump) + "," + fmt(bin.z) + "\n";
  }
  return csv;
}

json report_json(const TestReport& report) {
  json j;
  j["n_samples"] = report.n_samples;
  j["n_bins"] = report.bins.size();
  j["z_threshold"] = report.z_threshold;
  double max_abs_z = 0.0;
  for (const BinStat& b : report.bins)
    max_abs_z = std::max(max_abs_z, std::fabs(b.z));
  j["max_abs_z"] = max_abs_z;
  j["pass"] = report.pass;
  return j;
}

json run_martingale(const ExperimentConfig& cfg, OutputSink& sink,
                    bool& pass) {
  const FunctionalSpec spec = make_functional(cfg.functional, cfg.strike,
                                              cfg.horizon, cfg.mc_inner_count);
  const TestReport report = martingale_test(
      spec, cfg.effective_level(), cfg.horizon, cfg.n_paths, cfg.bins,
      cfg.z_threshold, cfg.master_seed, UnitExitLaw{}, cfg.threads);
  pass = report.pass;
  sink.add("martingale_bins.csv", bins_csv(report),
           "bin,dt_lo,dt_hi,count,mean_dt,mean_jump,se_jump,z");
  json j = report_json(report);
  j["functional"] = spec.name;
  j["level"] = cfg.effective_level();
  return j;
}

// --------------------------------------------------------------------------
// counterexample: the projected square functional must fail the criterion
// with the predicted conditional-mean line.
// --------------------------------------------------------------------------

json run_counterexample(const ExperimentConfig& cfg, OutputSink& sink,
                        bool& pass) {
  const int level = cfg.effective_level();
  const CounterexampleReport report = counterexample_regression(
      level, cfg.horizon, cfg.n_paths, cfg.bins, cfg.master_seed,
      UnitExitLaw{}, cfg.threads);
  const double intercept_target = std::ldexp(1.0, -2 * level);
  const bool detected = !report.report.pass;
  const bool slope_ok = std::fabs(report.fit.slope + 1.0) <= 0.05;
  const bool intercept_ok =
      std::fabs(report.fit.intercept - intercept_target) <=
      2.0 * report.fit.intercept_se;
  pass = detected && slope_ok && intercept_ok;

  sink.add("counterexample_bins.csv", bins_csv(report.report),
           "bin,dt_lo,dt_hi,count,mean_dt,mean_jump,se_jump,z");
  json j;
  j["level"] = level;
  j["martingale_report"] = report_json(report.report);
  j["martingale_rejected"] = detected;
  j["slope"] = report.fit.slope;
  j["slope_se"] = report.fit.slope_se;
  j["slope_target"] = -1.0;
  j["slope_ok"] = slope_ok;
  j["intercept"] = report.fit.intercept;
  j["intercept_se"] = report.fit.intercept_se;
  j["intercept_target"] = intercept_target;
  j["intercept_ok"] = intercept_ok;
  j["pass"] = pass;
  return j;
}

// --------------------------------------------------------------------------
// covariation
// --------------------------------------------------------------------------

std::vector<std::string> functional_list(const ExperimentConfig& cfg,
                                         std::vector<std::string> fallback) {
  if (!cfg.functionals.empty()) return cfg.functionals;
  return fallback;
}

json run_covariation(const ExperimentConfig& cfg, OutputSink& sink,
                     bool& pass) {
  const auto names = functional_list(
      cfg, {"identity", "compensated_square", "bachelier_call"});
  std::vector<FunctionalSpec> specs;
  for (const auto& name : names)
    specs.push_back(make_functional(name, cfg.strike, cfg.horizon,
                                    cfg.mc_inner_count));
  const auto rows = covariation_limit_experiment(
      specs, cfg.levels, cfg.horizon, cfg.n_paths, cfg.master_seed,
      cfg.cov_target, UnitExitLaw{}, cfg.threads);

  // Per-functional acceptance: walk functionals must sit in the Wald band at
  // every level; point-zero targets must be covered from level 3 on; for
  // point targets away from zero the absolute error must shrink with the
  // level; overridden targets must be covered at the deepest level.
  std::map<std::string, bool> verdicts;
  for (const auto& spec : specs) {
    std::vector<const CovariationRow*> mine;
    for (const auto& row : rows)
      if (row.functional == spec.name) mine.push_back(&row);
    bool ok = true;
    switch (spec.covariation_target.kind) {
      case CovariationTarget::Kind::kWaldBand:
        for (const auto* row : mine) ok = ok && row->within;
        break;
      case CovariationTarget::Kind::kPoint:
        if (spec.covariation_target.value == 0.0) {
          for (const auto* row : mine)
            if (row->level >= 3) ok = ok && row->within;
        } else {
          // Convergence up to CI resolution, with the deepest level
          // statistically consistent with the target.
          for (std::size_t i = 1; i < mine.size(); ++i) {
            const double err =
                std::fabs(mine[i]->estimate - mine[i]->target_lo);
            const double prev =
                std::fabs(mine[i - 1]->estimate - mine[i - 1]->target_lo);
            ok = ok && err < prev + mine[i]->ci_half + mine[i - 1]->ci_half;
          }
          if (!mine.empty()) {
            const double last =
                std::fabs(mine.back()->estimate - mine.back()->target_lo);
            const double first =
                std::fabs(mine.front()->estimate - mine.front()->target_lo);
            ok = ok &&
                 (last <= mine.back()->ci_half || last < 0.5 * first);
          }
        }
        break;
      case CovariationTarget::Kind::kNone:
        if (!mine.empty()) ok = mine.back()->within;
        break;
    }
    verdicts[spec.name] = ok;
  }
  pass = true;
  for (const auto& [name, ok] : verdicts) pass = pass && ok;

  std::string csv =
      "functional,level,n_paths,estimate,ci_half,target_lo,target_hi,within\n";
  for (const auto& row : rows)
    csv += row.functional + "," + std::to_string(row.level) + "," +
           std::to_string(row.n_paths) + "," + fmt(row.estimate) + "," +
           fmt(row.ci_half) + "," + fmt(row.target_lo) + "," +
           fmt(row.target_hi) + "," + (row.within ? "1" : "0") + "\n";
  sink.add("covariation.csv", csv,
           "functional,level,n_paths,estimate,ci_half,target_lo,target_hi,"
           "within");

  json j;
  j["n_paths"] = cfg.n_paths;
  json per = json::object();
  for (const auto& [name, ok] : verdicts) per[name] = ok;
  j["functional_verdicts"] = per;
  json jr = json::array();
  for (const auto& row : rows) {
    json r;
    r["functional"] = row.functional;
    r["level"] = row.level;
    r["estimate"] = row.estimate;
    r["ci_half"] = row.ci_half;
    r["target_lo"] = row.target_lo;
    r["target_hi"] = row.target_hi;
    r["within"] = row.within;
    jr.push_back(r);
  }
  j["rows"] = jr;
  j["pass"] = pass;
  return j;
}

// --------------------------------------------------------------------------
// derivative-rates
// --------------------------------------------------------------------------

json run_derivative_rates(const ExperimentConfig& cfg, OutputSink& sink,
                          bool& pass) {
  const auto names = functional_list(cfg, {"identity", "bachelier_call"});
  std::string csv = "functional,level,n_paths,mean_abs_error,log2_error\n";
  json per = json::object();
  pass = true;
  for (const auto& name : names) {
    const FunctionalSpec spec =
        make_functional(name, cfg.strike, cfg.horizon, cfg.mc_inner_count);
    const RateFit fit = derivative_error_experiment(
        spec, cfg.levels, cfg.horizon, cfg.n_paths, cfg.master_seed,
        UnitExitLaw{}, cfg.threads);
    bool ok;
    if (name == "identity") {
      ok = true;
      for (double e : fit.mean_abs_errors) ok = ok && e == 0.0;
    } else {
      ok = fit.fit_valid && fit.slope < 0.0;
      for (std::size_t i = 1; i < fit.mean_abs_errors.size(); ++i)
        ok = ok && fit.mean_abs_errors[i] < fit.mean_abs_errors[i - 1];
    }
    pass = pass && ok;
    for (std::size_t i = 0; i < fit.levels.size(); ++i) {
      csv += name + "," + std::to_string(fit.levels[i]) + "," +
             std::to_string(cfg.n_paths) + "," +
             fmt(fit.mean_abs_errors[i]) + ",";
      if (fit.mean_abs_errors[i] > 0.0)
        csv += fmt(std::log2(fit.mean_abs_errors[i]));
      csv += "\n";
    }
    json f;
    f["levels"] = fit.levels;
    f["mean_abs_errors"] = fit.mean_abs_errors;
    f["fit_valid"] = fit.fit_valid;
    if (fit.fit_valid) {
      f["slope"] = fit.slope;
      f["intercept"] = fit.intercept;
    }
    f["pass"] = ok;
    per[name] = f;
  }
  sink.add("derivative_rates.csv", csv,
           "functional,level,n_paths,mean_abs_error,log2_error");
  json j;
  j["functionals"] = per;
  j["pass"] = pass;
  return j;
}

// --------------------------------------------------------------------------
// jump-bound
// --------------------------------------------------------------------------

json run_jump_bound(const ExperimentConfig& cfg, OutputSink& sink,
                    bool& pass) {
  const auto names = functional_list(cfg, {"identity", "digital"});
  const int level = cfg.effective_level();
  std::string csv =
      "functional,level,n_paths,violations,max_jump,min_slack\n";
  json per = json::object();
  pass = true;
  for (const auto& name : names) {
    const FunctionalSpec spec =
        make_functional(name, cfg.strike, cfg.horizon, cfg.mc_inner_count);
    const JumpBoundReport report = jump_bound_experiment(
        spec, level, cfg.horizon, cfg.n_paths, cfg.grid_dt,
        cfg.grid_tolerance, cfg.master_seed, cfg.threads);
    pass = pass && report.pass;
    csv += name + "," + std::to_string(level) + "," +
           std::to_string(report.n_paths) + "," +
           std::to_string(report.violations) + "," + fmt(report.max_jump) +
           "," + fmt(report.min_slack) + "\n";
    json f;
    f["violations"] = report.violations;
    f["max_jump"] = report.max_jump;
    f["min_slack"] = report.min_slack;
    f["pass"] = report.pass;
    per[name] = f;
  }
  sink.add("jump_bound.csv", csv,
           "functional,level,n_paths,violations,max_jump,min_slack");
  json j;
  j["level"] = level;
  j["dt"] = cfg.grid_dt;
  j["grid_tolerance"] = cfg.grid_tolerance;
  j["functionals"] = per;
  j["pass"] = pass;
  return j;
}

}  // namespace

FunctionalSpec make_functional(const std::string& name, double strike,
                               double horizon,
                               std::uint32_t mc_inner_count) {
  if (name == "identity") return brownian_identity(horizon);
  if (name == "compensated_square") return compensated_square(horizon);
  if (name == "bachelier_call") return bachelier_call(strike, horizon);
  if (name == "digital") return digital(strike, horizon);
  if (name == "generic_call")
    return generic_terminal(
        "generic_call",
        [strike](double x) { return std::max(x - strike, 0.0); }, horizon,
        mc_inner_count);
  throw ConfigError("unknown functional '" + name + "'");
}

RunStatus run(const std::string& subcommand, const ExperimentConfig& config,
              std::ostream& log) {
  const auto& known = known_subcommands();
  if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
    log << "unknown subcommand '" << subcommand << "'\n";
    return RunStatus::kInvalid;
  }

  std::vector<std::string> todo;
  if (subcommand == "all") {
    todo = {"sample-exit",  "simulate",         "martingale-test",
            "counterexample", "covariation",    "derivative-rates",
            "jump-bound"};
  } else {
    todo = {subcommand};
  }

  const auto t0 = std::chrono::steady_clock::now();
  OutputSink sink;
  json results = json::object();
  json verdicts = json::object();
  bool all_pass = true;

  try {
    for (const auto& name : todo) {
      const ExperimentConfig cfg = config.effective(name);
      bool pass = false;
      json j;
      if (name == "sample-exit")
        j = run_sample_exit(cfg, sink, pass);
      else if (name == "simulate")
        j = run_simulate(cfg, sink, pass);
      else if (name == "martingale-test")
        j = run_martingale(cfg, sink, pass);
      else if (name == "counterexample")
        j = run_counterexample(cfg, sink, pass);
      else if (name == "covariation")
        j = run_covariation(cfg, sink, pass);
      else if (name == "derivative-rates")
        j = run_derivative_rates(cfg, sink, pass);
      else if (name == "jump-bound")
        j = run_jump_bound(cfg, sink, pass);
      results[name] = j;
      verdicts[name] = pass;
      all_pass = all_pass && pass;
      log << name << ": " << (pass ? "pass" : "FAIL") << "\n";
    }
  } catch (const ConfigError& e) {
    log << "refused: " << e.what() << "\n";
    return RunStatus::kInvalid;
  } catch (const std::invalid_argument& e) {
    log << "refused: " << e.what() << "\n";
    return RunStatus::kInvalid;
  } catch (const std::domain_error& e) {
    log << "refused: " << e.what() << "\n";
    return RunStatus::kInvalid;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return RunStatus::kInvalid;
  }

  const std::string config_hash = hex64(fnv1a64(config.canonical_text));

  json summary;
  summary["artifact_version"] = kVersion;
  summary["seed"] = config.master_seed;
  summary["config_hash"] = config_hash;
  summary["results"] = results;
  summary["verdicts"] = verdicts;
  summary["overall_pass"] = all_pass;
  sink.add("summary.json", summary.dump(2) + "\n");

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  json manifest;
  manifest["artifact_version"] = kVersion;
  manifest["config"] = config.canonical_text;
  manifest["config_hash"] = config_hash;
  manifest["wall_clock_seconds"] = wall;
  manifest["verdicts"] = verdicts;
  manifest["overall_pass"] = all_pass;
  manifest["files"] = sink.file_hashes();
  manifest["csv_schemas"] = sink.schemas();

  sink.write_all(config.out_dir);
  {
    std::ofstream out(std::filesystem::path(config.out_dir) / "manifest.json",
                      std::ios::binary);
    out << manifest.dump(2) << "\n";
  }
  return all_pass ? RunStatus::kOk : RunStatus::kCheckFailed;
}

}  // namespace rws
