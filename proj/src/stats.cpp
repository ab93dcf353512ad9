#include "rws/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace rws {

SampleStats summarize(std::span<const double> samples) {
  SampleStats s;
  s.count = samples.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count < 2) return s;
  double ss = 0.0;
  for (double v : samples) {
    const double d = v - s.mean;
    ss += d * d;
  }
  s.variance = ss / static_cast<double>(s.count - 1);
  s.std_error = std::sqrt(s.variance / static_cast<double>(s.count));
  return s;
}

double pearson_correlation(std::span<const double> x,
                           std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_correlation: need two equal samples");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson_correlation: degenerate sample");
  return sxy / std::sqrt(sxx * syy);
}

double ks_statistic(std::span<const double> draws,
                    const std::function<double(double)>& cdf) {
  if (draws.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

namespace {

LineFit solve_weighted(std::span<const double> x, std::span<const double> y,
                       const std::vector<double>& w, bool classical_se) {
  const std::size_t n = x.size();
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
    swxx += w[i] * x[i] * x[i];
    swxy += w[i] * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  if (!(det > 0.0) || !std::isfinite(det))
    throw std::invalid_argument("line fit: abscissae are degenerate");

  LineFit fit;
  fit.slope = (sw * swxy - swx * swy) / det;
  fit.intercept = (swxx * swy - swx * swxy) / det;

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += w[i] * r * r;
  }
  fit.residual_norm = std::sqrt(rss);

  if (classical_se) {
    const double s2 = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
    fit.slope_se = std::sqrt(s2 * sw / det);
    fit.intercept_se = std::sqrt(s2 * swxx / det);
  } else {
    fit.slope_se = std::sqrt(sw / det);
    fit.intercept_se = std::sqrt(swxx / det);
  }
  return fit;
}

}  // namespace

LineFit line_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("line_fit: need at least 3 points");
  std::vector<double> w(x.size(), 1.0);
  return solve_weighted(x, y, w, /*classical_se=*/true);
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma) {
  if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 3)
    throw std::invalid_argument(
        "weighted_line_fit: need at least 3 points with errors");
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(sigma[i] > 0.0))
      throw std::invalid_argument("weighted_line_fit: errors must be positive");
    w[i] = 1.0 / (sigma[i] * sigma[i]);
  }
  return solve_weighted(x, y, w, /*classical_se=*/false);
}

std::vector<std::size_t> equal_count_bounds(std::size_t n, std::size_t bins) {
  if (bins == 0 || n < bins)
    throw std::invalid_argument("equal_count_bounds: need n >= bins >= 1");
  std::vector<std::size_t> bounds(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) bounds[b] = b * n / bins;
  return bounds;
}

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace rws
