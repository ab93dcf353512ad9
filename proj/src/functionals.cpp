#include "rws/functionals.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "rws/normal_math.hpp"
#include "rws/rng.hpp"

namespace rws {

namespace {

void require_horizon(double horizon, const char* who) {
  if (!(horizon > 0.0))
    throw std::invalid_argument(std::string(who) +
                                ": horizon must be positive");
}

}  // namespace

FunctionalSpec brownian_identity(double horizon) {
  require_horizon(horizon, "brownian_identity");
  FunctionalSpec spec;
  spec.name = "identity";
  spec.horizon = horizon;
  spec.node_mean = [](double, double x, const NodeContext&) { return x; };
  spec.true_derivative = [](double, double) { return 1.0; };
  spec.covariation_target = {CovariationTarget::Kind::kWaldBand, 0.0};
  return spec;
}

FunctionalSpec compensated_square(double horizon) {
  require_horizon(horizon, "compensated_square");
  FunctionalSpec spec;
  spec.name = "compensated_square";
  spec.horizon = horizon;
  spec.node_mean = [](double t, double x, const NodeContext&) {
    return x * x - t;
  };
  spec.true_derivative = [](double, double x) { return 2.0 * x; };
  // E int 2 B_s ds = 0 by symmetry.
  spec.covariation_target = {CovariationTarget::Kind::kPoint, 0.0};
  return spec;
}

FunctionalSpec bachelier_call(double strike, double horizon) {
  require_horizon(horizon, "bachelier_call");
  FunctionalSpec spec;
  spec.name = "bachelier_call";
  spec.horizon = horizon;
  spec.node_mean = [strike, horizon](double t, double x, const NodeContext&) {
    if (t >= horizon) return std::max(x - strike, 0.0);
    const double s = std::sqrt(horizon - t);
    const double d = (x - strike) / s;
    return (x - strike) * normal_cdf(d) + s * normal_pdf(d);
  };
  spec.true_derivative = [strike, horizon](double t, double x) {
    if (t >= horizon) return x > strike ? 1.0 : (x < strike ? 0.0 : 0.5);
    return normal_cdf((x - strike) / std::sqrt(horizon - t));
  };
  // E Phi(B_s / sqrt(T-s)) = 1/2 at zero strike.
  if (strike == 0.0)
    spec.covariation_target = {CovariationTarget::Kind::kPoint, 0.5 * horizon};
  return spec;
}

FunctionalSpec digital(double strike, double horizon) {
  require_horizon(horizon, "digital");
  FunctionalSpec spec;
  spec.name = "digital";
  spec.horizon = horizon;
  spec.node_mean = [strike, horizon](double t, double x, const NodeContext&) {
    if (t >= horizon) return x > strike ? 1.0 : (x < strike ? 0.0 : 0.5);
    return normal_cdf((x - strike) / std::sqrt(horizon - t));
  };
  spec.true_derivative = [strike, horizon](double t, double x) {
    const double s = std::sqrt(horizon - t);
    return normal_pdf((x - strike) / s) / s;
  };
  return spec;
}

FunctionalSpec generic_terminal(std::string name,
                                std::function<double(double)> payoff,
                                double horizon,
                                std::uint32_t mc_inner_count) {
  require_horizon(horizon, "generic_terminal");
  if (mc_inner_count == 0)
    throw std::invalid_argument(
        "generic_terminal: mc_inner_count must be positive");
  FunctionalSpec spec;
  spec.name = std::move(name);
  spec.horizon = horizon;
  spec.mc_inner_count = mc_inner_count;
  spec.node_mean = [payoff = std::move(payoff), horizon, mc_inner_count](
                       double t, double x, const NodeContext& ctx) {
    if (t >= horizon) return payoff(x);
    const double s = std::sqrt(horizon - t);
    UniformSource inner(ctx.seed, StreamPurpose::kNested, ctx.level,
                        ctx.path_index, ctx.node_index);
    double sum = 0.0;
    for (std::uint32_t i = 0; i < mc_inner_count; ++i)
      sum += payoff(x + s * inner.next_normal());
    return sum / static_cast<double>(mc_inner_count);
  };
  return spec;
}

}  // namespace rws
