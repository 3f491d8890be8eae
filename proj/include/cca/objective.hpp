#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "cca/error.hpp"

namespace cca {

inline constexpr double kBceEpsilon = 1e-6;

struct VehicleMean {
  double value = 0.0;
  bool no_detection = false;
};

/// Mean of the unpainted-vehicle scores in one scene. An empty list means
/// nothing was detected; it maps to `no_detection_score` and is flagged.
inline VehicleMean mean_vehicle_score(std::span<const double> scores, double no_detection_score = 0.0) {
  if (scores.empty()) return {no_detection_score, true};
  for (double s : scores)
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::domain, "vehicle score outside [0,1]");
  const double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
  const double mean = sum / static_cast<double>(scores.size());
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  return {std::clamp(mean, *lo, *hi), false};
}

/// Binary cross-entropy against a zero target: -log(1 - s), with s clipped at 1 - 1e-6.
inline double bce_zero(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::domain, "bce_zero needs s in [0,1]");
  return -std::log1p(-std::min(s, 1.0 - kBceEpsilon));
}

/// z-scores with the n-1 sample standard deviation. A population with no
/// spread maps to all zeros.
inline std::vector<double> standardize(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorKind::insufficient_population, "standardize needs at least 2 scores");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  std::vector<double> out(xs.size(), 0.0);
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mean) / sd;
  return out;
}

struct CandidateScore {
  std::size_t candidate_index = 0;
  std::vector<double> per_transformation;  // S~_t for t in the configured set, in set order
  double mean_over_transformations = 0.0;
};

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorKind::empty_evaluation, "mean of an empty list");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace cca
