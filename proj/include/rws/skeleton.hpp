#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rws/exit_law.hpp"
#include "rws/rng.hpp"

namespace rws {

// Replay metadata: which stream produced a simulated path.
struct SourceTag {
  std::uint64_t seed = 0;
  std::uint32_t level = 0;
  std::uint64_t path_index = 0;
};

// One realization of the level-k stopping-time grid over [0, T].
//
// times[0] = 0 and times[n] is the n-th band-crossing time; the last entry
// times[N+1] is the first crossing beyond the horizon (the overshoot step,
// kept because the predictable information at the first node past t includes
// its duration). signs[n] is the crossing direction, values[n] the walk
// level 2^{-k} * (signs[1] + ... + signs[n]). signs[0] is a filler zero so
// all arrays share node indexing.
struct SkeletonPath {
  int level = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<int> signs;
  std::vector<double> values;
  SourceTag source;

  // Index N of the last node retained before the horizon.
  std::size_t last_index() const { return times.size() - 2; }
  double spatial_step() const { return std::ldexp(1.0, -level); }
};

// Cadlag piecewise-constant function: value(t) = initial_value + sum of
// jump_sizes with jump_time <= t.
struct StepFunction {
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  double initial_value = 0.0;

  double operator()(double t) const;
};

// Simulate one level-k skeleton up to horizon T. Durations are i.i.d.
// level-k exit times, signs i.i.d. symmetric and independent of durations.
// Per node exactly two uniforms are consumed: duration first, then sign.
// Refuses when the expected step count T * 4^k exceeds max_expected_steps.
SkeletonPath simulate_skeleton(int level, double horizon,
                               UniformSource& source,
                               const UnitExitLaw& law = UnitExitLaw{},
                               std::uint64_t max_expected_steps = 100000000);

// Number of crossings up to and including time t: max{n : times[n] <= t}.
std::size_t counting(const SkeletonPath& path, double t);

// Walk value at time t (cadlag step interpolation of the node values).
double walk_value(const SkeletonPath& path, double t);

// Quadratic variation of the walk at t: sum of squared jumps, which is
// exactly 4^{-k} * counting(path, t).
double bracket_walk(const SkeletonPath& path, double t);

// The walk as a step function over the retained nodes.
StepFunction step_function(const SkeletonPath& path);

// Columnar dump, one row per node including the overshoot row:
// n,time,sign,value
void write_csv(const SkeletonPath& path, std::ostream& out);

}  // namespace rws
