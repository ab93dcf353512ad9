#include "rws/exit_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rws/normal_math.hpp"

namespace rws {

namespace {

constexpr int kMaxSeriesTerms = 64;
constexpr double kLambda = kPi * kPi / 8.0;  // leading spectral eigenvalue

}  // namespace

UnitExitLaw::UnitExitLaw(double series_tolerance, double crossover_time,
                         int max_root_iterations)
    : tolerance_(series_tolerance),
      crossover_(crossover_time),
      max_iterations_(max_root_iterations) {
  if (!(series_tolerance > 0.0) || series_tolerance > 1e-12)
    throw std::invalid_argument(
        "UnitExitLaw: series tolerance must lie in (0, 1e-12]");
  if (!(crossover_time > 0.0))
    throw std::invalid_argument("UnitExitLaw: crossover time must be positive");
  if (max_root_iterations < 1)
    throw std::invalid_argument("UnitExitLaw: iteration cap must be >= 1");
}

UnitExitLaw::Eval UnitExitLaw::evaluate(double t) const {
  if (t <= crossover_) {
    // Images series. Exponent of term m is (2m-1)^2/(2t), shared between
    // survival and density.
    const double c = 1.0 / std::sqrt(2.0 * t);
    const double fcoef = std::sqrt(2.0 / kPi) / (t * std::sqrt(t));
    double s = 1.0;
    double f = 0.0;
    double sign = -1.0;
    for (int m = 1; m <= kMaxSeriesTerms; ++m) {
      const double odd = 2.0 * m - 1.0;
      const double z = odd * c;
      const double s_term = 2.0 * std::erfc(z);
      const double f_term = fcoef * odd * std::exp(-z * z);
      s += sign * s_term;
      f -= sign * f_term;
      if (s_term < tolerance_ && f_term < tolerance_) break;
      sign = -sign;
    }
    return {std::clamp(s, 0.0, 1.0), std::max(f, 0.0)};
  }
  // Spectral series.
  double s = 0.0;
  double f = 0.0;
  double sign = 1.0;
  for (int j = 0; j < kMaxSeriesTerms; ++j) {
    const double odd = 2.0 * j + 1.0;
    const double e = std::exp(-odd * odd * kLambda * t);
    const double s_term = (4.0 / kPi) * e / odd;
    const double f_term = (kPi / 2.0) * odd * e;
    s += sign * s_term;
    f += sign * f_term;
    if (s_term < tolerance_ && f_term < tolerance_) break;
    sign = -sign;
  }
  return {std::clamp(s, 0.0, 1.0), std::max(f, 0.0)};
}

double UnitExitLaw::survival(double t) const {
  if (t < 0.0) throw std::domain_error("survival: t must be nonnegative");
  if (t == 0.0) return 1.0;
  return evaluate(t).survival;
}

double UnitExitLaw::density(double t) const {
  if (t < 0.0) throw std::domain_error("density: t must be nonnegative");
  if (t == 0.0) return 0.0;
  return evaluate(t).density;
}

double UnitExitLaw::inverse_survival(double u) const {
  if (!(u > 0.0 && u <= 1.0))
    throw std::domain_error("inverse_survival: u must lie in (0,1]");
  if (u == 1.0) return 0.0;

  // Initial guess from the leading term of whichever series dominates.
  const double s_cross = evaluate(crossover_).survival;
  double t;
  if (u >= s_cross) {
    // 1 - 2 erfc(c) = u  =>  c = -Phi^{-1}((1-u)/4)/sqrt(2), t = 1/(2c^2)
    const double half = 0.25 * (1.0 - u);
    const double c = -inverse_normal_cdf(half) * kInvSqrt2;
    t = 1.0 / (2.0 * c * c);
  } else {
    // (4/pi) exp(-lambda t) = u
    t = -std::log(0.25 * kPi * u) / kLambda;
  }
  t = std::clamp(t, 1e-8, 1e4);

  // Bracket [lo, hi] with survival(lo) >= u >= survival(hi).
  double lo = t, hi = t;
  int used = 0;
  while (evaluate(lo).survival < u) {
    hi = lo;
    lo *= 0.75;
    if (++used > max_iterations_)
      throw std::runtime_error("inverse_survival: bracketing failed (left)");
  }
  while (evaluate(hi).survival > u) {
    lo = std::max(lo, hi);
    hi *= 1.5;
    if (++used > max_iterations_)
      throw std::runtime_error("inverse_survival: bracketing failed (right)");
  }
  if (lo > hi) std::swap(lo, hi);

  // Safeguarded Newton: keep the bracket, bisect whenever a Newton step
  // leaves it or the density is degenerate.
  t = 0.5 * (lo + hi);
  for (int it = used; it < max_iterations_; ++it) {
    const Eval e = evaluate(t);
    if (e.survival > u)
      lo = t;
    else
      hi = t;
    if (hi - lo <= 1e-10 * std::max(lo, 1e-300)) return 0.5 * (lo + hi);
    double next = t + (e.survival - u) / e.density;
    if (!(e.density > 0.0) || !(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (next == t) return t;
    t = next;
  }
  throw std::runtime_error(
      "inverse_survival: root search did not converge within iteration cap");
}

double UnitExitLaw::sample(UniformSource& source) const {
  return inverse_survival(source.next_uniform());
}

double sample_exit(const UnitExitLaw& law, int level, UniformSource& source) {
  if (level < 0) throw std::invalid_argument("sample_exit: level must be >= 0");
  return std::ldexp(law.sample(source), -2 * level);
}

}  // namespace rws
