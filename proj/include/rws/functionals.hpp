#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace rws {

// Identifies the node at which a conditional expectation is evaluated, so
// nested Monte Carlo estimators can draw from a substream keyed by
// (path index, node index) and stay reproducible.
struct NodeContext {
  std::uint64_t seed = 0;
  std::uint32_t level = 0;
  std::uint64_t path_index = 0;
  std::uint32_t node_index = 0;
};

// Known target of the covariation-with-walk experiment for a functional.
struct CovariationTarget {
  enum class Kind { kNone, kPoint, kWaldBand } kind = Kind::kNone;
  double value = 0.0;  // point target when kind == kPoint
};

// A square-integrable terminal functional of Brownian motion, exposed
// through u(t,x) = E[X_T | B_t = x]: the node values of the projected
// process are exactly u evaluated at the skeleton nodes. When the
// representation integrand is known in closed form it is exposed for
// benchmarking.
struct FunctionalSpec {
  std::string name;
  double horizon = 0.0;
  std::function<double(double t, double x, const NodeContext&)> node_mean;
  std::optional<std::function<double(double t, double x)>> true_derivative;
  std::uint32_t mc_inner_count = 0;  // nested estimator budget (generic only)
  CovariationTarget covariation_target;

  double payoff(double x) const { return node_mean(horizon, x, {}); }
};

// X_t = B_t: u(t,x) = x, integrand 1.
FunctionalSpec brownian_identity(double horizon);

// X_t = B_t^2 - t: u(t,x) = x^2 - t, integrand 2x. The projected process is
// deliberately not a martingale on the skeleton filtration; its jump has
// conditional mean 4^{-k} - duration given the predictable history.
FunctionalSpec compensated_square(double horizon);

// Arithmetic-Brownian call: u(t,x) = (x-K) Phi(d) + sqrt(T-t) phi(d) with
// d = (x-K)/sqrt(T-t); integrand Phi(d). Terminal payoff max(x-K, 0).
FunctionalSpec bachelier_call(double strike, double horizon);

// Bounded digital payoff: u(t,x) = Phi((x-K)/sqrt(T-t)); integrand
// phi(d)/sqrt(T-t). Terminal payoff 1{x>K} with 1/2 at the strike.
FunctionalSpec digital(double strike, double horizon);

// Terminal payoff g with nested Monte Carlo conditional means: u(t,x) is the
// average of g(x + sqrt(T-t) Z) over mc_inner_count standard normals drawn
// from the substream keyed by (path index, node index). No closed-form
// integrand.
FunctionalSpec generic_terminal(std::string name,
                                std::function<double(double)> payoff,
                                double horizon,
                                std::uint32_t mc_inner_count);

}  // namespace rws
