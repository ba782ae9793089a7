#include "pizero/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "pizero/error.hpp"
#include "pizero/rng.hpp"

namespace pizero::stats {

namespace {

double nearest_rank(const std::vector<double>& sorted, double p) {
  const auto b = static_cast<double>(sorted.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(p * b));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, static_cast<std::ptrdiff_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

}  // namespace

double mean(std::span<const double> samples) {
  if (samples.empty()) throw ConfigError("mean of an empty sample");
  return std::accumulate(samples.begin(), samples.end(), 0.0) /
         static_cast<double>(samples.size());
}

std::vector<double> bootstrap_means(std::span<const double> samples, std::size_t resamples,
                                    std::uint64_t seed) {
  Rng rng(seed, 0);
  const std::size_t n = samples.size();
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += samples[rng.below(n)];
    m = total / static_cast<double>(n);
  }
  return means;
}

Interval bca_interval(std::span<const double> samples, double confidence,
                      std::size_t resamples, std::uint64_t seed) {
  if (samples.size() < 2) throw ConfigError("bca_interval needs at least 2 samples");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ConfigError("confidence must lie in (0, 1)");
  }
  if (resamples == 0) throw ConfigError("bca_interval needs at least one resample");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  if (*lo_it == *hi_it) return {*lo_it, *lo_it};

  const double estimate = mean(samples);
  auto boot = bootstrap_means(samples, resamples, seed);
  std::sort(boot.begin(), boot.end());

  const auto below = std::lower_bound(boot.begin(), boot.end(), estimate) - boot.begin();
  const auto at_or_below = std::upper_bound(boot.begin(), boot.end(), estimate) - boot.begin();
  const double b = static_cast<double>(resamples);
  const double fraction = static_cast<double>(below + at_or_below) / (2.0 * b);

  const boost::math::normal standard;
  // Clamp away from {0, 1} so the quantile stays finite.
  const double clamped = std::clamp(fraction, 0.5 / b, 1.0 - 0.5 / b);
  const double z0 = boost::math::quantile(standard, clamped);

  const std::size_t n = samples.size();
  const double total = std::accumulate(samples.begin(), samples.end(), 0.0);
  std::vector<double> jackknife(n);
  for (std::size_t i = 0; i < n; ++i) {
    jackknife[i] = (total - samples[i]) / static_cast<double>(n - 1);
  }
  const double jack_mean = mean(jackknife);
  double num = 0.0, den = 0.0;
  for (double j : jackknife) {
    const double d = jack_mean - j;
    num += d * d * d;
    den += d * d;
  }
  const double accel = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;

  const double tail = (1.0 - confidence) / 2.0;
  const auto adjusted = [&](double p) {
    const double z = boost::math::quantile(standard, p);
    return boost::math::cdf(standard, z0 + (z0 + z) / (1.0 - accel * (z0 + z)));
  };
  return {nearest_rank(boot, adjusted(tail)), nearest_rank(boot, adjusted(1.0 - tail))};
}

CurvePoint summarize(std::uint64_t generation, std::vector<double> trial_scores,
                     double confidence, std::size_t resamples, std::uint64_t seed) {
  CurvePoint point;
  point.generation = generation;
  point.mean = mean(trial_scores);
  if (trial_scores.size() < 2) {
    point.ci_low = point.ci_high = point.mean;
  } else {
    const Interval ci = bca_interval(trial_scores, confidence, resamples, seed);
    point.ci_low = std::min(ci.low, point.mean);
    point.ci_high = std::max(ci.high, point.mean);
  }
  point.trial_scores = std::move(trial_scores);
  return point;
}

}  // namespace pizero::stats
