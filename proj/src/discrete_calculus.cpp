#include "rws/discrete_calculus.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rws {

ProjectedPath project(const SkeletonPath& path, const FunctionalSpec& spec) {
  if (path.horizon != spec.horizon)
    throw std::invalid_argument(
        "project: functional horizon does not match path horizon");
  const std::size_t n_nodes = path.last_index() + 1;  // 0..N

  ProjectedPath out;
  out.node_values.resize(n_nodes);
  NodeContext ctx{path.source.seed, path.source.level, path.source.path_index,
                  0};
  for (std::size_t n = 0; n < n_nodes; ++n) {
    ctx.node_index = static_cast<std::uint32_t>(n);
    try {
      out.node_values[n] = spec.node_mean(path.times[n], path.values[n], ctx);
    } catch (const std::exception& e) {
      throw std::runtime_error("project: node_mean failed at node " +
                               std::to_string(n) + ": " + e.what());
    }
  }
  if (n_nodes > 1) {
    out.jumps.resize(n_nodes - 1);
    out.derivatives.resize(n_nodes - 1);
    for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
      out.jumps[i] = out.node_values[i + 1] - out.node_values[i];
      out.derivatives[i] = out.jumps[i] / (path.values[i + 1] - path.values[i]);
    }
  }
  return out;
}

double discrete_integral(std::span<const double> integrand,
                         const SkeletonPath& path, double t) {
  const std::size_t n_t = counting(path, t);
  if (integrand.size() < n_t)
    throw std::out_of_range("discrete_integral: integrand covers " +
                            std::to_string(integrand.size()) +
                            " nodes, need " + std::to_string(n_t));
  double sum = 0.0;
  for (std::size_t n = 1; n <= n_t; ++n)
    sum += integrand[n - 1] * (path.values[n] - path.values[n - 1]);
  return sum;
}

double covariation_with_walk(std::span<const double> jumps_by_node,
                             const SkeletonPath& path, double t) {
  const std::size_t n_t = counting(path, t);
  if (jumps_by_node.size() < n_t)
    throw std::out_of_range("covariation_with_walk: jump sequence covers " +
                            std::to_string(jumps_by_node.size()) +
                            " nodes, need " + std::to_string(n_t));
  double sum = 0.0;
  for (std::size_t n = 1; n <= n_t; ++n)
    sum += jumps_by_node[n - 1] * (path.values[n] - path.values[n - 1]);
  return sum;
}

double bracket_of_bracket(std::span<const double> jumps_by_node,
                          const SkeletonPath& path) {
  const std::size_t n_t = path.last_index();
  if (jumps_by_node.size() < n_t)
    throw std::out_of_range("bracket_of_bracket: jump sequence covers " +
                            std::to_string(jumps_by_node.size()) +
                            " nodes, need " + std::to_string(n_t));
  double sum = 0.0;
  for (std::size_t n = 1; n <= n_t; ++n) {
    const double term =
        jumps_by_node[n - 1] * (path.values[n] - path.values[n - 1]);
    sum += term * term;
  }
  return sum;
}

double max_jump(const ProjectedPath& projected) {
  double m = 0.0;
  for (double j : projected.jumps) m = std::max(m, std::fabs(j));
  return m;
}

StepFunction step_function(const SkeletonPath& path,
                           const ProjectedPath& projected) {
  StepFunction f;
  f.initial_value = projected.node_values.empty() ? 0.0
                                                  : projected.node_values[0];
  f.jump_times.assign(path.times.begin() + 1,
                      path.times.begin() + 1 + projected.jumps.size());
  f.jump_sizes = projected.jumps;
  return f;
}

void write_csv(const SkeletonPath& path, const ProjectedPath& projected,
               std::ostream& out) {
  out << "n,time,sign,value,node_value,jump,derivative\n";
  char buf[192];
  for (std::size_t n = 0; n < projected.node_values.size(); ++n) {
    if (n == 0) {
      std::snprintf(buf, sizeof(buf), "0,%.17g,0,%.17g,%.17g,,\n",
                    path.times[0], path.values[0], projected.node_values[0]);
    } else {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n",
                    n, path.times[n], path.signs[n], path.values[n],
                    projected.node_values[n], projected.jumps[n - 1],
                    projected.derivatives[n - 1]);
    }
    out << buf;
  }
}

}  // namespace rws
