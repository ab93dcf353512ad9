#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rws {

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error = 0.0;
};

SampleStats summarize(std::span<const double> samples);

double pearson_correlation(std::span<const double> x,
                           std::span<const double> y);

// One-sample Kolmogorov-Smirnov distance between the draws and the given
// CDF. Sorts a copy.
double ks_statistic(std::span<const double> draws,
                    const std::function<double(double)>& cdf);

// Two-sample Kolmogorov-Smirnov distance. Sorts copies.
double ks_statistic(std::span<const double> a, std::span<const double> b);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double residual_norm = 0.0;
};

// Ordinary least squares y = intercept + slope * x with classical standard
// errors from the residual variance. Needs at least 3 points.
LineFit line_fit(std::span<const double> x, std::span<const double> y);

// Weighted least squares with weights 1/sigma_i^2; parameter standard errors
// come from the exact covariance (X^T W X)^{-1}.
LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> sigma);

// Boundaries of `bins` equal-count groups of n sorted samples: group b is
// [bounds[b], bounds[b+1]).
std::vector<std::size_t> equal_count_bounds(std::size_t n, std::size_t bins);

// 64-bit FNV-1a content hash, used for output manifests.
std::uint64_t fnv1a64(std::span<const char> bytes);

}  // namespace rws
