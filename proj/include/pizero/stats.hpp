#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pizero::stats {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

double mean(std::span<const double> samples);

/// Means of `resamples` bootstrap resamples. Resample b draws n indices in
/// order from Rng(seed, 0) with Rng::below(n).
std::vector<double> bootstrap_means(std::span<const double> samples, std::size_t resamples,
                                    std::uint64_t seed);

/// Bias-corrected and accelerated bootstrap interval for the mean.
///
///   z0 = Phi^-1((#{m_b < mean} + #{m_b <= mean}) / 2B)
///   a  = sum (jbar - j_i)^3 / (6 (sum (jbar - j_i)^2)^1.5)   (jackknife means j_i)
///   alpha_lo/hi = Phi(z0 + (z0 + z) / (1 - a (z0 + z))),  z = Phi^-1((1 -/+ c) / 2)
///
/// Endpoints are nearest-rank percentiles of the sorted bootstrap means.
/// Identical samples give the degenerate interval (v, v).
Interval bca_interval(std::span<const double> samples, double confidence,
                      std::size_t resamples, std::uint64_t seed);

struct CurvePoint {
  std::uint64_t generation = 0;
  std::vector<double> trial_scores;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean and BCa band over trials. A single trial yields a zero-width band;
/// the band is widened if needed so that low <= mean <= high.
CurvePoint summarize(std::uint64_t generation, std::vector<double> trial_scores,
                     double confidence, std::size_t resamples, std::uint64_t seed);

}  // namespace pizero::stats
