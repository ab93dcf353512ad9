#include "rws/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rws {

namespace {

constexpr double kZ995 = 2.5758293035489004;  // 99% two-sided normal quantile

unsigned resolve_threads(unsigned threads, std::uint64_t n) {
  if (threads == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw ? hw : 1;
  }
  if (static_cast<std::uint64_t>(threads) > n)
    threads = static_cast<unsigned>(n ? n : 1);
  return threads;
}

}  // namespace

void parallel_for(std::uint64_t n, unsigned threads,
                  const std::function<void(std::uint64_t)>& body) {
  if (n == 0) return;
  threads = resolve_threads(threads, n);
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<NodeSample> collect_node_samples(const FunctionalSpec& spec,
                                             int level, double horizon,
                                             std::uint64_t n_paths,
                                             std::uint64_t seed,
                                             const UnitExitLaw& law,
                                             unsigned threads) {
  std::vector<std::vector<NodeSample>> per_path(n_paths);
  parallel_for(n_paths, threads, [&](std::uint64_t p) {
    UniformSource src(seed, StreamPurpose::kSkeleton,
                      static_cast<std::uint32_t>(level), p);
    SkeletonPath path = simulate_skeleton(level, horizon, src, law);
    path.source = {seed, static_cast<std::uint32_t>(level), p};
    const ProjectedPath proj = project(path, spec);
    auto& samples = per_path[p];
    samples.reserve(proj.jumps.size());
    for (std::size_t i = 0; i < proj.jumps.size(); ++i) {
      NodeSample s;
      s.path_index = p;
      s.node_index = static_cast<std::uint32_t>(i + 1);
      s.duration = path.times[i + 1] - path.times[i];
      s.sign = path.signs[i + 1];
      s.prior_value = path.values[i];
      s.jump = proj.jumps[i];
      samples.push_back(s);
    }
  });
  std::size_t total = 0;
  for (const auto& v : per_path) total += v.size();
  std::vector<NodeSample> pooled;
  pooled.reserve(total);
  for (auto& v : per_path)
    pooled.insert(pooled.end(), v.begin(), v.end());
  return pooled;
}

namespace {

// Sorts the pool by duration and cuts it into equal-count bins.
std::vector<BinStat> bin_by_duration(std::vector<NodeSample>& samples,
                                     std::size_t n_bins) {
  std::sort(samples.begin(), samples.end(),
            [](const NodeSample& a, const NodeSample& b) {
              if (a.duration != b.duration) return a.duration < b.duration;
              if (a.path_index != b.path_index)
                return a.path_index < b.path_index;
              return a.node_index < b.node_index;
            });
  const auto bounds = equal_count_bounds(samples.size(), n_bins);
  std::vector<BinStat> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t lo = bounds[b], hi = bounds[b + 1];
    BinStat& bin = bins[b];
    bin.count = hi - lo;
    bin.duration_lo = samples[lo].duration;
    bin.duration_hi = samples[hi - 1].duration;
    double sum_d = 0.0, sum_j = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      sum_d += samples[i].duration;
      sum_j += samples[i].jump;
    }
    bin.mean_duration = sum_d / static_cast<double>(bin.count);
    bin.mean_jump = sum_j / static_cast<double>(bin.count);
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = samples[i].jump - bin.mean_jump;
      ss += d * d;
    }
    if (bin.count > 1) {
      bin.se_jump = std::sqrt(ss / static_cast<double>(bin.count - 1) /
                              static_cast<double>(bin.count));
    }
    if (bin.se_jump > 0.0)
      bin.z = bin.mean_jump / bin.se_jump;
    else
      bin.z = bin.mean_jump == 0.0 ? 0.0
                                   : std::numeric_limits<double>::infinity();
  }
  return bins;
}

void require_bin_occupancy(std::size_t n_samples, std::size_t n_bins,
                           int level, double horizon) {
  if (n_samples >= 100 * n_bins) return;
  const double expected_nodes = std::ldexp(horizon, 2 * level);
  const double required_paths =
      std::ceil(100.0 * static_cast<double>(n_bins) /
                std::max(expected_nodes, 1e-12));
  throw std::invalid_argument(
      "martingale_test: " + std::to_string(n_samples) + " pooled nodes over " +
      std::to_string(n_bins) +
      " bins leaves fewer than 100 per bin; at this level and horizon about " +
      std::to_string(static_cast<std::uint64_t>(required_paths)) +
      " paths are required");
}

}  // namespace

TestReport martingale_test_from_samples(std::vector<NodeSample> samples,
                                        std::size_t n_bins,
                                        double z_threshold) {
  if (n_bins < 5)
    throw std::invalid_argument("martingale_test: need at least 5 bins");
  if (samples.size() < 100 * n_bins)
    throw std::invalid_argument(
        "martingale_test: fewer than 100 samples per bin");
  TestReport report;
  report.z_threshold = z_threshold;
  report.n_samples = samples.size();
  report.bins = bin_by_duration(samples, n_bins);
  report.pass = true;
  for (const BinStat& b : report.bins)
    if (!(std::fabs(b.z) < z_threshold)) report.pass = false;
  return report;
}

TestReport martingale_test(const FunctionalSpec& spec, int level,
                           double horizon, std::uint64_t n_paths,
                           std::size_t n_bins, double z_threshold,
                           std::uint64_t seed, const UnitExitLaw& law,
                           unsigned threads) {
  if (n_paths == 0)
    throw std::invalid_argument("martingale_test: need at least one path");
  if (n_bins < 5)
    throw std::invalid_argument("martingale_test: need at least 5 bins");
  auto samples =
      collect_node_samples(spec, level, horizon, n_paths, seed, law, threads);
  require_bin_occupancy(samples.size(), n_bins, level, horizon);
  return martingale_test_from_samples(std::move(samples), n_bins, z_threshold);
}

CounterexampleReport counterexample_regression(int level, double horizon,
                                               std::uint64_t n_paths,
                                               std::size_t n_bins,
                                               std::uint64_t seed,
                                               const UnitExitLaw& law,
                                               unsigned threads) {
  const FunctionalSpec spec = compensated_square(horizon);
  TestReport report = martingale_test(spec, level, horizon, n_paths, n_bins,
                                      4.0, seed, law, threads);
  std::vector<double> x, y, sigma;
  x.reserve(report.bins.size());
  for (const BinStat& b : report.bins) {
    x.push_back(b.mean_duration);
    y.push_back(b.mean_jump);
    sigma.push_back(b.se_jump);
  }
  CounterexampleReport out;
  out.report = std::move(report);
  out.fit = weighted_line_fit(x, y, sigma);
  return out;
}

std::vector<CovariationRow> covariation_limit_experiment(
    std::span<const FunctionalSpec> specs, std::span<const int> levels,
    double horizon, std::uint64_t n_paths, std::uint64_t seed,
    std::optional<double> target_override, const UnitExitLaw& law,
    unsigned threads) {
  if (specs.empty())
    throw std::invalid_argument("covariation: need at least one functional");
  if (n_paths < 2)
    throw std::invalid_argument("covariation: need at least two paths");

  // Resolve every acceptance band up front so refusals precede the work.
  struct Band {
    bool wald;
    double lo, hi;
  };
  std::vector<Band> bands(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto& target = specs[s].covariation_target;
    switch (target.kind) {
      case CovariationTarget::Kind::kWaldBand:
        bands[s] = {true, 0.0, 0.0};
        break;
      case CovariationTarget::Kind::kPoint:
        bands[s] = {false, target.value, target.value};
        break;
      case CovariationTarget::Kind::kNone:
        if (!target_override)
          throw std::invalid_argument(
              "covariation: no target known for functional '" + specs[s].name +
              "' and no override supplied");
        bands[s] = {false, *target_override, *target_override};
        break;
    }
  }

  std::vector<CovariationRow> rows;
  for (int level : levels) {
    std::vector<std::vector<double>> estimates(
        specs.size(), std::vector<double>(n_paths));
    parallel_for(n_paths, threads, [&](std::uint64_t p) {
      UniformSource src(seed, StreamPurpose::kSkeleton,
                        static_cast<std::uint32_t>(level), p);
      SkeletonPath path = simulate_skeleton(level, horizon, src, law);
      path.source = {seed, static_cast<std::uint32_t>(level), p};
      for (std::size_t s = 0; s < specs.size(); ++s) {
        const ProjectedPath proj = project(path, specs[s]);
        estimates[s][p] = covariation_with_walk(proj.jumps, path, horizon);
      }
    });
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const ConfidenceInterval ci = confidence_interval(estimates[s]);
      CovariationRow row;
      row.functional = specs[s].name;
      row.level = level;
      row.n_paths = n_paths;
      row.estimate = ci.mean;
      row.ci_half = ci.half_width;
      if (bands[s].wald) {
        row.target_lo = horizon - std::ldexp(1.0, -2 * level);
        row.target_hi = horizon;
      } else {
        row.target_lo = bands[s].lo;
        row.target_hi = bands[s].hi;
      }
      row.within = row.estimate >= row.target_lo - row.ci_half &&
                   row.estimate <= row.target_hi + row.ci_half;
      rows.push_back(row);
    }
  }
  return rows;
}

RateFit derivative_error_experiment(const FunctionalSpec& spec,
                                    std::span<const int> levels,
                                    double horizon, std::uint64_t n_paths,
                                    std::uint64_t seed,
                                    const UnitExitLaw& law, unsigned threads) {
  if (!spec.true_derivative)
    throw std::invalid_argument(
        "derivative_error_experiment: functional '" + spec.name +
        "' exposes no closed-form integrand");
  if (levels.size() < 3)
    throw std::invalid_argument(
        "derivative_error_experiment: need at least 3 levels for a rate fit");
  if (n_paths == 0)
    throw std::invalid_argument(
        "derivative_error_experiment: need at least one path");

  const auto& dx = *spec.true_derivative;
  RateFit out;
  out.levels.assign(levels.begin(), levels.end());
  out.mean_abs_errors.resize(levels.size());
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const int level = levels[li];
    std::vector<double> sums(n_paths, 0.0);
    std::vector<std::uint64_t> counts(n_paths, 0);
    parallel_for(n_paths, threads, [&](std::uint64_t p) {
      UniformSource src(seed, StreamPurpose::kSkeleton,
                        static_cast<std::uint32_t>(level), p);
      SkeletonPath path = simulate_skeleton(level, horizon, src, law);
      path.source = {seed, static_cast<std::uint32_t>(level), p};
      const ProjectedPath proj = project(path, spec);
      double sum = 0.0;
      for (std::size_t i = 0; i < proj.derivatives.size(); ++i)
        sum += std::fabs(proj.derivatives[i] -
                         dx(path.times[i], path.values[i]));
      sums[p] = sum;
      counts[p] = proj.derivatives.size();
    });
    double total = 0.0;
    std::uint64_t n_nodes = 0;
    for (std::uint64_t p = 0; p < n_paths; ++p) {
      total += sums[p];
      n_nodes += counts[p];
    }
    out.mean_abs_errors[li] =
        n_nodes ? total / static_cast<double>(n_nodes) : 0.0;
  }

  out.fit_valid = true;
  for (double e : out.mean_abs_errors)
    if (!(e > 0.0)) out.fit_valid = false;
  if (out.fit_valid) {
    std::vector<double> x(levels.size()), y(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      x[i] = static_cast<double>(levels[i]);
      y[i] = std::log2(out.mean_abs_errors[i]);
    }
    const LineFit fit = line_fit(x, y);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.residual_norm = fit.residual_norm;
  }
  return out;
}

FineGridPath simulate_fine_path(double horizon, double dt,
                                UniformSource& source) {
  if (!(horizon > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("simulate_fine_path: bad horizon or step");
  const auto n_steps =
      static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt)));
  FineGridPath fine;
  fine.dt = horizon / static_cast<double>(n_steps);
  fine.values.resize(n_steps + 1);
  fine.values[0] = 0.0;
  const double scale = std::sqrt(fine.dt);
  double b = 0.0;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    b += scale * source.next_normal();
    fine.values[i] = b;
  }
  return fine;
}

namespace {

void require_grid_resolution(double dt, int level, const char* who) {
  if (level < 0) throw std::invalid_argument(std::string(who) + ": level < 0");
  const double limit = std::ldexp(1.0, -2 * level) / 100.0;
  if (dt > limit * (1.0 + 1e-9))
    throw std::invalid_argument(
        std::string(who) + ": grid step " + std::to_string(dt) +
        " too coarse for level " + std::to_string(level) + " (need <= " +
        std::to_string(limit) + ")");
}

}  // namespace

SkeletonPath extract_skeleton_from_path(const FineGridPath& fine, int level) {
  require_grid_resolution(fine.dt, level, "extract_skeleton_from_path");
  const double band = std::ldexp(1.0, -level);

  SkeletonPath path;
  path.level = level;
  path.horizon = fine.horizon();
  path.times.push_back(0.0);
  path.signs.push_back(0);
  path.values.push_back(0.0);

  long long walk = 0;
  for (std::size_t i = 1; i < fine.values.size(); ++i) {
    double level_value = band * static_cast<double>(walk);
    if (std::fabs(fine.values[i] - level_value) < band) continue;
    const int sign = fine.values[i] > level_value ? +1 : -1;
    walk += sign;
    level_value = band * static_cast<double>(walk);
    if (std::fabs(fine.values[i] - level_value) >= band)
      throw std::runtime_error(
          "extract_skeleton_from_path: grid step crossed two bands; grid far "
          "too coarse");
    path.times.push_back(fine.dt * static_cast<double>(i));
    path.signs.push_back(sign);
    path.values.push_back(level_value);
  }

  // Overshoot censored beyond the data.
  path.times.push_back(std::numeric_limits<double>::infinity());
  path.signs.push_back(+1);
  path.values.push_back(band * static_cast<double>(walk + 1));
  return path;
}

std::vector<double> crossing_durations(int level, double dt,
                                       std::size_t count,
                                       UniformSource& source) {
  require_grid_resolution(dt, level, "crossing_durations");
  const double band = std::ldexp(1.0, -level);
  const double scale = std::sqrt(dt);
  std::vector<double> durations;
  durations.reserve(count);
  double b = 0.0;
  long long walk = 0;
  std::uint64_t step = 0, last = 0;
  while (durations.size() < count) {
    b += scale * source.next_normal();
    ++step;
    double level_value = band * static_cast<double>(walk);
    if (std::fabs(b - level_value) < band) continue;
    const int sign = b > level_value ? +1 : -1;
    walk += sign;
    level_value = band * static_cast<double>(walk);
    if (std::fabs(b - level_value) >= band)
      throw std::runtime_error(
          "crossing_durations: grid step crossed two bands");
    durations.push_back(dt * static_cast<double>(step - last));
    last = step;
  }
  return durations;
}

std::vector<double> crossing_durations(int level, double dt, std::size_t count,
                                       std::uint64_t seed, std::size_t chunks,
                                       unsigned threads) {
  if (chunks == 0 || chunks > count)
    throw std::invalid_argument("crossing_durations: bad chunk count");
  std::vector<std::vector<double>> parts(chunks);
  parallel_for(chunks, threads, [&](std::uint64_t c) {
    const std::size_t lo = c * count / chunks;
    const std::size_t hi = (c + 1) * count / chunks;
    UniformSource src(seed, StreamPurpose::kGrid,
                      static_cast<std::uint32_t>(level), c, /*substream=*/1);
    parts[c] = crossing_durations(level, dt, hi - lo, src);
  });
  std::vector<double> all;
  all.reserve(count);
  for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return all;
}

JumpBoundSample jump_bound_check(const FunctionalSpec& spec,
                                 const FineGridPath& fine, int level,
                                 double grid_tolerance) {
  require_grid_resolution(fine.dt, level, "jump_bound_check");
  if (std::fabs(fine.horizon() - spec.horizon) > 1e-9 * spec.horizon)
    throw std::invalid_argument(
        "jump_bound_check: functional horizon does not match the grid path");
  const double band = std::ldexp(1.0, -level);
  const NodeContext ctx{};

  long long walk = 0;
  double d_cur = spec.node_mean(0.0, 0.0, ctx);
  double sup = 0.0;
  double biggest_jump = 0.0;
  for (std::size_t i = 1; i < fine.values.size(); ++i) {
    const double t = fine.dt * static_cast<double>(i);
    const double b = fine.values[i];
    double level_value = band * static_cast<double>(walk);
    if (std::fabs(b - level_value) >= band) {
      const int sign = b > level_value ? +1 : -1;
      walk += sign;
      level_value = band * static_cast<double>(walk);
      if (std::fabs(b - level_value) >= band)
        throw std::runtime_error(
            "jump_bound_check: grid step crossed two bands");
      const double d_new = spec.node_mean(t, level_value, ctx);
      biggest_jump = std::max(biggest_jump, std::fabs(d_new - d_cur));
      d_cur = d_new;
    }
    sup = std::max(sup, std::fabs(d_cur - spec.node_mean(t, b, ctx)));
  }

  JumpBoundSample sample;
  sample.max_jump = biggest_jump;
  sample.sup_distance = sup;
  sample.pass = biggest_jump <= 2.0 * sup + grid_tolerance;
  return sample;
}

JumpBoundReport jump_bound_experiment(const FunctionalSpec& spec, int level,
                                      double horizon, std::uint64_t n_paths,
                                      double dt, double grid_tolerance,
                                      std::uint64_t seed, unsigned threads) {
  if (n_paths == 0)
    throw std::invalid_argument("jump_bound_experiment: need paths");
  require_grid_resolution(dt, level, "jump_bound_experiment");
  std::vector<JumpBoundSample> samples(n_paths);
  parallel_for(n_paths, threads, [&](std::uint64_t p) {
    UniformSource src(seed, StreamPurpose::kGrid,
                      static_cast<std::uint32_t>(level), p);
    const FineGridPath fine = simulate_fine_path(horizon, dt, src);
    samples[p] = jump_bound_check(spec, fine, level, grid_tolerance);
  });
  JumpBoundReport report;
  report.n_paths = n_paths;
  report.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (!s.pass) ++report.violations;
    report.max_jump = std::max(report.max_jump, s.max_jump);
    report.min_slack = std::min(
        report.min_slack, 2.0 * s.sup_distance + grid_tolerance - s.max_jump);
  }
  report.pass = report.violations == 0;
  return report;
}

ConfidenceInterval confidence_interval(std::span<const double> samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("confidence_interval: need >= 2 samples");
  const SampleStats s = summarize(samples);
  return {s.mean, kZ995 * s.std_error};
}

std::vector<double> pooled_exit_draws(const UnitExitLaw& law, int level,
                                      std::uint64_t count, std::uint64_t seed,
                                      unsigned threads) {
  if (count == 0) return {};
  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t chunks = (count + kChunk - 1) / kChunk;
  std::vector<double> draws(count);
  parallel_for(chunks, threads, [&](std::uint64_t c) {
    UniformSource src(seed, StreamPurpose::kDraws,
                      static_cast<std::uint32_t>(level), c);
    const std::uint64_t lo = c * kChunk;
    const std::uint64_t hi = std::min(count, lo + kChunk);
    for (std::uint64_t i = lo; i < hi; ++i)
      draws[i] = sample_exit(law, level, src);
  });
  return draws;
}

}  // namespace rws
