#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "cca/error.hpp"
#include "cca/seed.hpp"
#include "cca/texture.hpp"

namespace cca {

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::domain, "normal quantile needs p in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Inverse CDF of Normal(mean, sigma^2) truncated to [lo, hi], evaluated at u in (0,1).
/// Works on the side of the interval that contains the lower tail mass so that
/// CDF differences are not lost to cancellation.
inline double truncated_normal_quantile(double u, double mean, double sigma, double lo, double hi) {
  const double za = (lo - mean) / sigma;
  const double zb = (hi - mean) / sigma;
  if (za > 0.0) {
    // Reflect so the interval sits on the left of the mode.
    return -truncated_normal_quantile(1.0 - u, -mean, sigma, -hi, -lo);
  }
  const double pa = normal_cdf(za);
  const double pb = normal_cdf(zb);
  double x;
  if (pb - pa <= 0.0) {
    // Interval carries no representable mass; fall back to the nearest bound.
    x = (std::abs(za) < std::abs(zb)) ? lo : hi;
  } else {
    double p = pa + u * (pb - pa);
    p = std::min(std::max(p, std::nextafter(0.0, 1.0)), std::nextafter(1.0, 0.0));
    x = mean + sigma * normal_quantile(p);
  }
  return std::min(hi, std::max(lo, x));
}

/// Search distribution around the current pattern: each channel independently
/// Normal(mean_channel, sigma^2) truncated to [0, 255].
struct SearchDistribution {
  CamouflagePattern mean;
  double sigma = 10.0;
  std::size_t lambda = 20;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::config, "sigma must be positive and finite");
    if (lambda < 2) throw Error(ErrorKind::insufficient_population, "lambda must be at least 2");
  }
};

/// Candidate `index` of the population keyed by `seed`. Pure in (seed, index).
inline CamouflagePattern sample(const SearchDistribution& dist, std::uint64_t seed, std::uint64_t index) {
  dist.validate();
  const SeedStream stream(mix_seed(seed, {index}));
  ChannelGrid out(dist.mean.width(), dist.mean.height());
  const auto mean = dist.mean.channels();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = truncated_normal_quantile(stream.unit(i), mean[i], dist.sigma, kChannelMin, kChannelMax);
  return CamouflagePattern(std::move(out));
}

/// Score-function factor of the untruncated normal: (candidate - mean) / sigma^2.
inline ChannelGrid score_gradient(const CamouflagePattern& mean, const CamouflagePattern& candidate, double sigma) {
  if (!mean.grid().same_shape(candidate.grid()))
    throw Error(ErrorKind::invalid_dimension, "mean and candidate shapes differ");
  if (!(sigma > 0.0)) throw Error(ErrorKind::domain, "sigma must be positive");
  ChannelGrid out(mean.width(), mean.height());
  const double inv_var = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (candidate.channels()[i] - mean.channels()[i]) * inv_var;
  return out;
}

}  // namespace cca
