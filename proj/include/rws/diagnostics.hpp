#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rws/discrete_calculus.hpp"
#include "rws/exit_law.hpp"
#include "rws/functionals.hpp"
#include "rws/skeleton.hpp"
#include "rws/stats.hpp"

namespace rws {

// Run body(i) for i in [0, n) on a small worker pool. Results must be
// written to per-index slots; the partition of indices over workers carries
// no information, so output is independent of thread count.
void parallel_for(std::uint64_t n, unsigned threads,
                  const std::function<void(std::uint64_t)>& body);

// One projected jump together with the predictable-history features that can
// explain it: its duration, the withheld sign, and the walk value entering
// the node.
struct NodeSample {
  std::uint64_t path_index = 0;
  std::uint32_t node_index = 0;
  double duration = 0.0;
  int sign = 0;
  double prior_value = 0.0;
  double jump = 0.0;
};

std::vector<NodeSample> collect_node_samples(
    const FunctionalSpec& spec, int level, double horizon,
    std::uint64_t n_paths, std::uint64_t seed,
    const UnitExitLaw& law = UnitExitLaw{}, unsigned threads = 0);

// Conditional-mean-zero test of the projected jumps, binned by duration
// quantiles.
struct BinStat {
  double duration_lo = 0.0;
  double duration_hi = 0.0;
  double mean_duration = 0.0;
  std::size_t count = 0;
  double mean_jump = 0.0;
  double se_jump = 0.0;
  double z = 0.0;
};

struct TestReport {
  std::vector<BinStat> bins;
  double z_threshold = 4.0;
  std::size_t n_samples = 0;
  bool pass = false;
};

TestReport martingale_test(const FunctionalSpec& spec, int level,
                           double horizon, std::uint64_t n_paths,
                           std::size_t n_bins, double z_threshold,
                           std::uint64_t seed,
                           const UnitExitLaw& law = UnitExitLaw{},
                           unsigned threads = 0);

// Same test on an already collected pool (used for controls such as
// re-randomized signs).
TestReport martingale_test_from_samples(std::vector<NodeSample> samples,
                                        std::size_t n_bins,
                                        double z_threshold);

// Regression of binned mean jump on binned mean duration for the
// compensated-square functional. The exact conditional mean is
// 4^{-k} - duration, so the fitted slope targets -1 and the intercept 4^{-k}.
struct CounterexampleReport {
  TestReport report;
  LineFit fit;
};

CounterexampleReport counterexample_regression(
    int level, double horizon, std::uint64_t n_paths, std::size_t n_bins,
    std::uint64_t seed, const UnitExitLaw& law = UnitExitLaw{},
    unsigned threads = 0);

// Monte Carlo estimate of E [projected X, walk]_T per level, with a 99%
// confidence interval and the functional's acceptance band.
struct CovariationRow {
  std::string functional;
  int level = 0;
  std::uint64_t n_paths = 0;
  double estimate = 0.0;
  double ci_half = 0.0;
  double target_lo = 0.0;
  double target_hi = 0.0;
  bool within = false;
};

std::vector<CovariationRow> covariation_limit_experiment(
    std::span<const FunctionalSpec> specs, std::span<const int> levels,
    double horizon, std::uint64_t n_paths, std::uint64_t seed,
    std::optional<double> target_override = std::nullopt,
    const UnitExitLaw& law = UnitExitLaw{}, unsigned threads = 0);

// Mean absolute distance between the discrete integrand and the closed-form
// one, per level, with a least-squares slope in log2 scale.
struct RateFit {
  std::vector<int> levels;
  std::vector<double> mean_abs_errors;
  bool fit_valid = false;  // false when some level has exactly zero error
  double slope = 0.0;
  double intercept = 0.0;
  double residual_norm = 0.0;
};

RateFit derivative_error_experiment(const FunctionalSpec& spec,
                                    std::span<const int> levels,
                                    double horizon, std::uint64_t n_paths,
                                    std::uint64_t seed,
                                    const UnitExitLaw& law = UnitExitLaw{},
                                    unsigned threads = 0);

// Brownian path sampled on a uniform grid. The step is adjusted so an
// integer number of steps lands exactly on the horizon.
struct FineGridPath {
  double dt = 0.0;
  std::vector<double> values;

  double horizon() const {
    return dt * static_cast<double>(values.size() - 1);
  }
};

FineGridPath simulate_fine_path(double horizon, double dt,
                                UniformSource& source);

// Crossing-time scan of a stored grid path: records the first grid time at
// which the increment from the last recorded level leaves the open band
// (-2^{-k}, 2^{-k}). The overshoot entry is censored at +infinity. Refuses
// grids coarser than 4^{-k}/100.
SkeletonPath extract_skeleton_from_path(const FineGridPath& fine, int level);

// First `count` inter-crossing durations of a single streamed grid path
// (no storage, path extended as needed).
std::vector<double> crossing_durations(int level, double dt,
                                       std::size_t count,
                                       UniformSource& source);

// Deterministically chunked parallel version; chunk c draws from the
// (seed, grid purpose, level, stream=c, substream=1) source.
std::vector<double> crossing_durations(int level, double dt,
                                       std::size_t count, std::uint64_t seed,
                                       std::size_t chunks,
                                       unsigned threads = 0);

// Checks max |jump of projected X| <= 2 sup |projected X - X| + tolerance
// on one coupled path, evaluating both sides on the grid.
struct JumpBoundSample {
  double max_jump = 0.0;
  double sup_distance = 0.0;
  bool pass = false;
};

JumpBoundSample jump_bound_check(const FunctionalSpec& spec,
                                 const FineGridPath& fine, int level,
                                 double grid_tolerance);

struct JumpBoundReport {
  std::uint64_t n_paths = 0;
  std::uint64_t violations = 0;
  double max_jump = 0.0;
  double min_slack = 0.0;  // min over paths of rhs + tol - lhs
  bool pass = false;
};

JumpBoundReport jump_bound_experiment(const FunctionalSpec& spec, int level,
                                      double horizon, std::uint64_t n_paths,
                                      double dt, double grid_tolerance,
                                      std::uint64_t seed,
                                      unsigned threads = 0);

// Mean with 99% half-width (2.5758... standard errors). Needs >= 2 samples.
struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
};

ConfidenceInterval confidence_interval(std::span<const double> samples);

// Pooled exit-time draws from deterministically chunked substreams.
std::vector<double> pooled_exit_draws(const UnitExitLaw& law, int level,
                                      std::uint64_t count, std::uint64_t seed,
                                      unsigned threads = 0);

}  // namespace rws
