#include "rws/skeleton.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace rws {

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  double v = initial_value;
  for (auto jt = jump_sizes.begin(),
            end = jump_sizes.begin() + (it - jump_times.begin());
       jt != end; ++jt)
    v += *jt;
  return v;
}

SkeletonPath simulate_skeleton(int level, double horizon,
                               UniformSource& source, const UnitExitLaw& law,
                               std::uint64_t max_expected_steps) {
  if (level < 0)
    throw std::invalid_argument("simulate_skeleton: level must be >= 0");
  if (!(horizon > 0.0))
    throw std::invalid_argument("simulate_skeleton: horizon must be positive");
  const double expected_steps = std::ldexp(horizon, 2 * level);
  if (expected_steps > static_cast<double>(max_expected_steps))
    throw std::invalid_argument(
        "simulate_skeleton: expected step count " +
        std::to_string(expected_steps) + " exceeds the memory cap of " +
        std::to_string(max_expected_steps) + " steps");

  SkeletonPath path;
  path.level = level;
  path.horizon = horizon;
  path.times.reserve(static_cast<std::size_t>(expected_steps) + 4);
  path.signs.reserve(static_cast<std::size_t>(expected_steps) + 4);
  path.values.reserve(static_cast<std::size_t>(expected_steps) + 4);

  const double step = std::ldexp(1.0, -level);
  path.times.push_back(0.0);
  path.signs.push_back(0);
  path.values.push_back(0.0);

  const std::uint64_t hard_cap = 4 * max_expected_steps + 1024;
  double t = 0.0;
  long long walk = 0;
  for (std::uint64_t n = 1;; ++n) {
    if (n > hard_cap)
      throw std::runtime_error("simulate_skeleton: step count ran away");
    const double duration = sample_exit(law, level, source);
    const int sign = source.next_sign();
    assert(duration > 0.0);
    t += duration;
    walk += sign;
    path.times.push_back(t);
    path.signs.push_back(sign);
    path.values.push_back(step * static_cast<double>(walk));
    if (t > horizon) break;
  }
  return path;
}

std::size_t counting(const SkeletonPath& path, double t) {
  if (t < 0.0 || t > path.horizon)
    throw std::domain_error("counting: t outside [0, horizon]");
  auto it = std::upper_bound(path.times.begin(), path.times.end(), t);
  return static_cast<std::size_t>(it - path.times.begin()) - 1;
}

double walk_value(const SkeletonPath& path, double t) {
  return path.values[counting(path, t)];
}

double bracket_walk(const SkeletonPath& path, double t) {
  return std::ldexp(static_cast<double>(counting(path, t)), -2 * path.level);
}

StepFunction step_function(const SkeletonPath& path) {
  StepFunction f;
  const std::size_t n = path.last_index();
  f.jump_times.assign(path.times.begin() + 1, path.times.begin() + 1 + n);
  f.jump_sizes.reserve(n);
  for (std::size_t i = 1; i <= n; ++i)
    f.jump_sizes.push_back(path.values[i] - path.values[i - 1]);
  return f;
}

void write_csv(const SkeletonPath& path, std::ostream& out) {
  out << "n,time,sign,value\n";
  char buf[96];
  for (std::size_t n = 0; n < path.times.size(); ++n) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d,%.17g\n", n, path.times[n],
                  path.signs[n], path.values[n]);
    out << buf;
  }
}

}  // namespace rws
