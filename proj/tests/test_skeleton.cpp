#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rws/diagnostics.hpp"
#include "rws/skeleton.hpp"
#include "rws/stats.hpp"

using rws::counting;
using rws::SkeletonPath;
using rws::simulate_skeleton;
using rws::StepFunction;
using rws::StreamPurpose;
using rws::UniformSource;

namespace {

SkeletonPath sim(int level, double horizon, std::uint64_t seed,
                 std::uint64_t path_index) {
  UniformSource src(seed, StreamPurpose::kSkeleton,
                    static_cast<std::uint32_t>(level), path_index);
  SkeletonPath p = simulate_skeleton(level, horizon, src);
  p.source = {seed, static_cast<std::uint32_t>(level), path_index};
  return p;
}

// Hand-built path for the deterministic operations: level 1, signs +,-,+.
SkeletonPath handmade() {
  SkeletonPath p;
  p.level = 1;
  p.horizon = 1.0;
  p.times = {0.0, 0.125, 0.25, 0.8, 1.25};
  p.signs = {0, +1, -1, +1, -1};
  p.values = {0.0, 0.5, 0.0, 0.5, 0.0};
  return p;
}

}  // namespace

TEST_CASE("construction invariants hold across levels and seeds") {
  for (int level : {0, 1, 3, 5}) {
    for (std::uint64_t path = 0; path < 8; ++path) {
      const SkeletonPath p = sim(level, 0.7, 42, path);
      const double step = std::ldexp(1.0, -level);
      const std::size_t n = p.last_index();
      REQUIRE(p.times.size() == p.signs.size());
      REQUIRE(p.times.size() == p.values.size());
      CHECK(p.times[0] == 0.0);
      CHECK(p.values[0] == 0.0);
      CHECK(p.times[n] <= 0.7);
      CHECK(p.times[n + 1] > 0.7);
      for (std::size_t i = 1; i < p.times.size(); ++i) {
        CHECK(p.times[i] > p.times[i - 1]);
        CHECK(std::fabs(p.values[i] - p.values[i - 1]) == step);  // exact
        CHECK((p.signs[i] == 1 || p.signs[i] == -1));
      }
    }
  }
}

TEST_CASE("tiny horizon at level 0 leaves only the overshoot") {
  // P(exit <= 0.01) ~ 2 erfc(1/sqrt(0.02)) ~ 4e-23: no crossing is retained.
  for (std::uint64_t path = 0; path < 200; ++path) {
    const SkeletonPath p = sim(0, 0.01, 7, path);
    CHECK(p.last_index() == 0);
  }
}

TEST_CASE("node count obeys the Wald bound at level 2") {
  const int n_paths = 20000;
  std::vector<double> counts(n_paths);
  for (int i = 0; i < n_paths; ++i)
    counts[i] = static_cast<double>(sim(2, 1.0, 99, i).last_index());
  const auto s = rws::summarize(counts);
  // E[4^{-k} C_T] in [T - 4^{-k}, T] => E[C] in [15, 16] at k=2, T=1.
  CHECK(s.mean > 15.0 - 4.5 * s.std_error);
  CHECK(s.mean < 16.0 + 4.5 * s.std_error);
}

TEST_CASE("counting is cadlag in the node times") {
  const SkeletonPath p = handmade();
  CHECK(counting(p, 0.0) == 0);
  CHECK(counting(p, 0.1) == 0);
  CHECK(counting(p, 0.125) == 1);  // jump counted at its time
  CHECK(counting(p, 0.2) == 1);
  CHECK(counting(p, 0.25) == 2);
  CHECK(counting(p, 0.8) == 3);
  CHECK(counting(p, 1.0) == 3);  // t = T retains the last index
  CHECK_THROWS_AS(counting(p, -0.1), std::domain_error);
  CHECK_THROWS_AS(counting(p, 1.0001), std::domain_error);
}

TEST_CASE("walk value steps through the signed levels") {
  const SkeletonPath p = handmade();
  CHECK(rws::walk_value(p, 0.0) == 0.0);
  CHECK(rws::walk_value(p, 0.124) == 0.0);
  CHECK(rws::walk_value(p, 0.125) == 0.5);
  CHECK(rws::walk_value(p, 0.5) == 0.0);
  CHECK(rws::walk_value(p, 0.9) == 0.5);  // signs +,-,+ at level 1
}

TEST_CASE("walk bracket is exactly 4^{-k} times the counting process") {
  for (int level : {1, 2, 4}) {
    const SkeletonPath p = sim(level, 1.0, 5, level);
    const double c = std::ldexp(1.0, -2 * level);
    for (double t = 0.0; t <= 1.0; t += 0.0403) {
      CHECK(rws::bracket_walk(p, t) ==
            c * static_cast<double>(counting(p, t)));
    }
    CHECK(rws::bracket_walk(p, 0.0) == 0.0);
  }
}

TEST_CASE("mean terminal bracket sits in the Wald band") {
  const int n_paths = 10000;
  std::vector<double> brackets(n_paths);
  for (int i = 0; i < n_paths; ++i)
    brackets[i] = rws::bracket_walk(sim(2, 1.0, 31, i), 1.0);
  const auto ci = rws::confidence_interval(brackets);
  CHECK(ci.mean > 1.0 - 0.0625 - ci.half_width);
  CHECK(ci.mean < 1.0 + ci.half_width);
}

TEST_CASE("signs are independent of durations and mean-zero") {
  std::vector<double> signs, durations;
  for (int i = 0; i < 2000; ++i) {
    const SkeletonPath p = sim(2, 1.0, 12345, i);
    for (std::size_t n = 1; n <= p.last_index(); ++n) {
      signs.push_back(p.signs[n]);
      durations.push_back(p.times[n] - p.times[n - 1]);
    }
  }
  const double n = static_cast<double>(signs.size());
  REQUIRE(n > 10000);
  CHECK(std::fabs(rws::pearson_correlation(signs, durations)) <
        4.0 / std::sqrt(n));
  const auto s = rws::summarize(signs);
  CHECK(std::fabs(s.mean) < 4.0 * s.std_error);
}

TEST_CASE("terminal second moment matches the bracket expectation") {
  // E[A_T^2] = 4^{-k} E[C_T] exactly; compare the two sample means.
  const int n_paths = 20000;
  std::vector<double> squares(n_paths), brackets(n_paths);
  for (int i = 0; i < n_paths; ++i) {
    const SkeletonPath p = sim(2, 1.0, 88, i);
    const double a = rws::walk_value(p, 1.0);
    squares[i] = a * a;
    brackets[i] = rws::bracket_walk(p, 1.0);
  }
  const auto sq = rws::summarize(squares);
  const auto br = rws::summarize(brackets);
  const double se = std::sqrt(sq.std_error * sq.std_error +
                              br.std_error * br.std_error);
  CHECK(std::fabs(sq.mean - br.mean) < 4.5 * se);
}

TEST_CASE("replay determinism and stream separation") {
  const SkeletonPath a = sim(3, 1.0, 2024, 5);
  const SkeletonPath b = sim(3, 1.0, 2024, 5);
  CHECK(a.times == b.times);
  CHECK(a.signs == b.signs);
  CHECK(a.values == b.values);
  const SkeletonPath c = sim(3, 1.0, 2024, 6);
  CHECK(a.times != c.times);
}

TEST_CASE("memory cap refusal names the limit") {
  UniformSource src(1, StreamPurpose::kSkeleton, 12, 0);
  CHECK_THROWS_WITH_AS(simulate_skeleton(12, 10.0, src),
                       doctest::Contains("exceeds the memory cap"),
                       std::invalid_argument);
  CHECK_THROWS_AS(simulate_skeleton(-1, 1.0, src), std::invalid_argument);
  CHECK_THROWS_AS(simulate_skeleton(2, 0.0, src), std::invalid_argument);
}

TEST_CASE("step function evaluation is cadlag") {
  StepFunction f;
  f.initial_value = 1.0;
  f.jump_times = {0.5, 1.5, 2.5};
  f.jump_sizes = {2.0, -1.0, 0.25};
  CHECK(f(0.0) == 1.0);
  CHECK(f(0.4999) == 1.0);
  CHECK(f(0.5) == 3.0);
  CHECK(f(1.5) == 2.0);
  CHECK(f(2.4) == 2.0);
  CHECK(f(3.0) == 2.25);
}

TEST_CASE("walk step function matches walk_value on a grid") {
  const SkeletonPath p = sim(2, 1.0, 77, 0);
  const StepFunction f = rws::step_function(p);
  for (double t = 0.0; t <= 1.0; t += 0.0101)
    CHECK(f(t) == rws::walk_value(p, t));
}

TEST_CASE("csv dump is bit-stable") {
  const SkeletonPath p = handmade();
  std::ostringstream os;
  rws::write_csv(p, os);
  CHECK(os.str() ==
        "n,time,sign,value\n"
        "0,0,0,0\n"
        "1,0.125,1,0.5\n"
        "2,0.25,-1,0\n"
        "3,0.80000000000000004,1,0.5\n"
        "4,1.25,-1,0\n");
}
