#pragma once

#include "rws/rng.hpp"

namespace rws {

// Law of the first exit time tau of standard Brownian motion from [-1,1].
//
// The survival function P(tau > t) is evaluated by two complementary series:
// a method-of-images (erfc) expansion that converges fast for small t and the
// spectral (eigenfunction) expansion that converges fast for large t,
//
//   small t:  S(t) = 1 + 2 sum_{m>=1} (-1)^m erfc((2m-1)/sqrt(2t))
//   large t:  S(t) = (4/pi) sum_{j>=0} (-1)^j/(2j+1) exp(-(2j+1)^2 pi^2 t/8)
//
// with matching term-wise derivatives for the density. Both are alternating
// with decreasing terms, so truncation error is bounded by the first omitted
// term.
//
// Exit times for the level-k band [-2^{-k}, 2^{-k}] are the unit law scaled
// by 2^{-2k} (Brownian scaling).
class UnitExitLaw {
 public:
  explicit UnitExitLaw(double series_tolerance = 1e-13,
                       double crossover_time = 0.5,
                       int max_root_iterations = 200);

  // P(tau > t). Absolute error bounded by the configured tolerance.
  double survival(double t) const;

  // Density of tau, -dS/dt.
  double density(double t) const;

  // Unique t >= 0 with survival(t) = u, to relative accuracy 1e-10.
  double inverse_survival(double u) const;

  // Inverse-transform draw. Consumes exactly one uniform.
  double sample(UniformSource& source) const;

  double series_tolerance() const { return tolerance_; }
  double crossover_time() const { return crossover_; }

 private:
  struct Eval {
    double survival;
    double density;
  };
  Eval evaluate(double t) const;

  double tolerance_;
  double crossover_;
  int max_iterations_;
};

// Exit time of the increment from the level-k band: 2^{-2k} times a unit
// draw. Consumes exactly one uniform.
double sample_exit(const UnitExitLaw& law, int level, UniformSource& source);

}  // namespace rws
