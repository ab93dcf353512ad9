#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rws/functionals.hpp"
#include "rws/skeleton.hpp"

namespace rws {

// Projection of a functional on one skeleton path.
//
// node_values[n] = u(times[n], values[n]) for n = 0..N (retained nodes);
// jumps[i]       = node_values[i+1] - node_values[i], the jump at times[i+1];
// derivatives[i] = jumps[i] / (values[i+1] - values[i]), the discrete
//                  integrand held on [times[i], times[i+1]).
// The walk jump is +-2^{-k}, so the ratio never degenerates.
struct ProjectedPath {
  std::vector<double> node_values;
  std::vector<double> jumps;
  std::vector<double> derivatives;
};

// Evaluate the conditional-expectation projection of `spec` on `path`.
// The spec and path horizons must agree. Failures of node_mean are rethrown
// with the node index attached.
ProjectedPath project(const SkeletonPath& path, const FunctionalSpec& spec);

// Discrete stochastic integral with predictable (left-node) sampling:
// sum over times[n] <= t of integrand[n-1] * (values[n] - values[n-1]).
// integrand[i] is the value held on [times[i], times[i+1]).
double discrete_integral(std::span<const double> integrand,
                         const SkeletonPath& path, double t);

// Covariation with the walk: sum over times[n] <= t of
// jumps_by_node[n-1] * (values[n] - values[n-1]), where jumps_by_node[i]
// is the jump of the other process at times[i+1].
double covariation_with_walk(std::span<const double> jumps_by_node,
                             const SkeletonPath& path, double t);

// Bracket of the covariation over the whole horizon:
// sum over retained nodes of (jumps_by_node[n-1] * (values[n]-values[n-1]))^2.
// Pathwise this equals 4^{-k} times the sum of squared jumps.
double bracket_of_bracket(std::span<const double> jumps_by_node,
                          const SkeletonPath& path);

// Largest absolute jump of the projected process (0 when there are none).
double max_jump(const ProjectedPath& projected);

// The projected process as a step function over the retained nodes.
StepFunction step_function(const SkeletonPath& path,
                           const ProjectedPath& projected);

// Columnar dump over the retained nodes:
// n,time,sign,value,node_value,jump,derivative
void write_csv(const SkeletonPath& path, const ProjectedPath& projected,
               std::ostream& out);

}  // namespace rws
