#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cca/detail/format.hpp"
#include "cca/detail/parallel.hpp"
#include "cca/distribution.hpp"
#include "cca/error.hpp"
#include "cca/objective.hpp"
#include "cca/scene.hpp"
#include "cca/seed.hpp"
#include "cca/texture.hpp"

namespace cca {

enum class Mode { attack, enhance };

inline const char* to_string(Mode m) noexcept { return m == Mode::attack ? "attack" : "enhance"; }

struct OptimizerConfig {
  Mode mode = Mode::attack;
  double alpha = 1000.0;
  double sigma = 10.0;
  std::size_t lambda = 20;
  std::size_t max_iterations = 300;
  std::size_t patience = 10;
  double tolerance = 1e-4;
  std::uint64_t base_seed = 0;
  std::vector<Transformation> transformations;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::config, "alpha must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::config, "sigma must be positive");
    if (lambda < 2) throw Error(ErrorKind::insufficient_population, "lambda must be at least 2");
    if (patience < 1) throw Error(ErrorKind::config, "patience must be at least 1");
    if (!(tolerance >= 0.0)) throw Error(ErrorKind::config, "tolerance must be >= 0");
    if (transformations.empty()) throw Error(ErrorKind::config, "transformation set is empty");
    require_unique(transformations);
  }
};

/// Scores S~_t(zeta_k) for every candidate k (rows) and transformation t
/// (columns). Cells start empty so incomplete grids are detectable.
class EvaluationGrid {
 public:
  EvaluationGrid(std::size_t candidates, std::size_t transformations)
      : candidates_(candidates), transformations_(transformations), cells_(candidates * transformations) {}

  std::size_t candidates() const noexcept { return candidates_; }
  std::size_t transformations() const noexcept { return transformations_; }

  void set(std::size_t k, std::size_t t, double score) { cells_.at(k * transformations_ + t) = score; }
  const std::optional<double>& cell(std::size_t k, std::size_t t) const { return cells_.at(k * transformations_ + t); }

  double at(std::size_t k, std::size_t t) const {
    const auto& c = cell(k, t);
    if (!c)
      throw Error(ErrorKind::incomplete_evaluation,
                  "missing score for candidate " + std::to_string(k) + ", transformation " + std::to_string(t));
    return *c;
  }

  void require_complete() const {
    for (std::size_t k = 0; k < candidates_; ++k)
      for (std::size_t t = 0; t < transformations_; ++t) (void)at(k, t);
  }

  /// E_t S~_t(zeta_k) for each candidate.
  std::vector<double> candidate_means() const {
    std::vector<double> out(candidates_);
    for (std::size_t k = 0; k < candidates_; ++k) {
      double sum = 0.0;
      for (std::size_t t = 0; t < transformations_; ++t) sum += at(k, t);
      out[k] = sum / static_cast<double>(transformations_);
    }
    return out;
  }

 private:
  std::size_t candidates_;
  std::size_t transformations_;
  std::vector<std::optional<double>> cells_;
};

/// Population gradient estimate
///   g = 1 / (lambda |T| sigma^2) * sum_t sum_k beta_k H[0, S~_t(zeta_k)] (zeta_k - c)
/// with beta the standardized transformation-averaged candidate scores.
/// Accumulation order is fixed (t outer, k inner).
inline ChannelGrid estimate_gradient(const SearchDistribution& dist, const EvaluationGrid& evaluations,
                                     std::span<const CamouflagePattern> candidates) {
  dist.validate();
  if (evaluations.candidates() != dist.lambda || candidates.size() != dist.lambda)
    throw Error(ErrorKind::incomplete_evaluation, "population size does not match lambda");
  if (evaluations.transformations() == 0) throw Error(ErrorKind::incomplete_evaluation, "no transformations");
  evaluations.require_complete();

  const auto beta = standardize(evaluations.candidate_means());
  std::vector<double> weight(dist.lambda, 0.0);
  for (std::size_t t = 0; t < evaluations.transformations(); ++t)
    for (std::size_t k = 0; k < dist.lambda; ++k) weight[k] += beta[k] * bce_zero(evaluations.at(k, t));

  ChannelGrid g(dist.mean.width(), dist.mean.height());
  const auto mean = dist.mean.channels();
  for (std::size_t k = 0; k < dist.lambda; ++k) {
    if (!candidates[k].grid().same_shape(dist.mean.grid()))
      throw Error(ErrorKind::invalid_dimension, "candidate shape differs from the mean");
    if (weight[k] == 0.0) continue;
    const auto zeta = candidates[k].channels();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += weight[k] * (zeta[i] - mean[i]);
  }
  const double scale = 1.0 / (static_cast<double>(dist.lambda) *
                              static_cast<double>(evaluations.transformations()) * dist.sigma * dist.sigma);
  for (double& v : g.values()) v *= scale;
  return g;
}

struct HistoryEntry {
  std::size_t iteration = 0;
  double objective = 0.0;
  double best_objective = 0.0;
  std::size_t stall_count = 0;

  bool operator==(const HistoryEntry&) const = default;
};

struct SearchState {
  std::size_t iteration = 0;
  CamouflagePattern current;
  double current_objective = 0.0;
  CamouflagePattern best;
  double best_objective = 0.0;
  std::size_t stall_count = 0;
  std::vector<HistoryEntry> history;

  bool operator==(const SearchState&) const = default;
};

inline std::size_t effective_threads(const OptimizerConfig& config, const SceneScorer& scorer) {
  return scorer.concurrency() == Concurrency::serialized ? 1 : config.threads;
}

/// E_{t in T} S~_t(pattern), one scorer call per transformation.
inline double expected_score(const SceneScorer& scorer, const CamouflagePattern& pattern,
                             std::span<const Transformation> transformations, std::size_t threads = 1) {
  std::vector<double> scores(transformations.size());
  detail::parallel_for(transformations.size(), threads, [&](std::size_t t) {
    scores[t] = scene_mean_score(score_scene(scorer, pattern, transformations[t])).value;
  });
  return mean_of(scores);
}

/// Seed key shared by every candidate of one iteration; candidate k is
/// sample(dist, iteration_seed(base, i), k). Independent of mode.
inline std::uint64_t iteration_seed(std::uint64_t base_seed, std::size_t iteration) {
  return mix_seed(base_seed, {static_cast<std::uint64_t>(iteration)});
}

inline std::vector<CamouflagePattern> sample_population(const SearchDistribution& dist, std::uint64_t base_seed,
                                                        std::size_t iteration) {
  std::vector<CamouflagePattern> out;
  out.reserve(dist.lambda);
  const auto key = iteration_seed(base_seed, iteration);
  for (std::size_t k = 0; k < dist.lambda; ++k) out.push_back(sample(dist, key, k));
  return out;
}

inline bool improves(Mode mode, double candidate, double reference, double margin) noexcept {
  return mode == Mode::attack ? candidate < reference - margin : candidate > reference + margin;
}

inline SearchState initial_state(const OptimizerConfig& config, const SceneScorer& scorer,
                                 const CamouflagePattern& initial) {
  config.validate();
  const double objective =
      expected_score(scorer, initial, config.transformations, effective_threads(config, scorer));
  return {0, initial, objective, initial, objective, 0, {{0, objective, objective, 0}}};
}

/// One iteration: sample, evaluate every (candidate, transformation) cell,
/// estimate the gradient, take the clamped step, re-score the new mean.
/// Any scorer failure propagates and leaves `state` untouched.
inline SearchState step(const SearchState& state, const OptimizerConfig& config, const SceneScorer& scorer) {
  config.validate();
  const SearchDistribution dist{state.current, config.sigma, config.lambda};
  const auto candidates = sample_population(dist, config.base_seed, state.iteration);
  const std::size_t n_t = config.transformations.size();
  const std::size_t threads = effective_threads(config, scorer);

  std::vector<double> scores(config.lambda * n_t);
  detail::parallel_for(scores.size(), threads, [&](std::size_t cell) {
    const std::size_t k = cell / n_t;
    const std::size_t t = cell % n_t;
    scores[cell] = scene_mean_score(score_scene(scorer, candidates[k], config.transformations[t])).value;
  });
  EvaluationGrid grid(config.lambda, n_t);
  for (std::size_t cell = 0; cell < scores.size(); ++cell) grid.set(cell / n_t, cell % n_t, scores[cell]);

  const ChannelGrid g = estimate_gradient(dist, grid, candidates);
  ChannelGrid next = state.current.grid();
  const double direction = config.mode == Mode::attack ? -1.0 : 1.0;
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += direction * config.alpha * g[i];

  SearchState out = state;
  out.current = clamp(std::move(next));
  out.current_objective = expected_score(scorer, out.current, config.transformations, threads);
  out.iteration = state.iteration + 1;
  if (improves(config.mode, out.current_objective, state.best_objective, config.tolerance)) {
    out.stall_count = 0;
  } else {
    out.stall_count = state.stall_count + 1;
  }
  if (improves(config.mode, out.current_objective, state.best_objective, 0.0)) {
    out.best = out.current;
    out.best_objective = out.current_objective;
  }
  out.history.push_back({out.iteration, out.current_objective, out.best_objective, out.stall_count});
  return out;
}

struct RunResult {
  CamouflagePattern best;
  double best_objective = 0.0;
  std::vector<HistoryEntry> history;
  SearchState final_state;
};

using StepObserver = std::function<void(const SearchState&)>;

/// Steps until the best objective has stalled for `patience` iterations or
/// the iteration budget is spent. Returns the best pattern seen.
inline RunResult run(const OptimizerConfig& config, const SceneScorer& scorer, const CamouflagePattern& initial,
                     const StepObserver& observer = {}) {
  SearchState state = initial_state(config, scorer, initial);
  if (observer) observer(state);
  while (state.iteration < config.max_iterations && state.stall_count < config.patience) {
    state = step(state, config, scorer);
    if (observer) observer(state);
  }
  return {state.best, state.best_objective, state.history, state};
}

inline constexpr const char* kHistoryCsvHeader = "iteration,objective,best_objective,stall_count";

inline void write_history_csv(std::ostream& out, std::span<const HistoryEntry> history) {
  out << kHistoryCsvHeader << '\n';
  for (const auto& h : history)
    out << h.iteration << ',' << detail::format_double(h.objective) << ',' << detail::format_double(h.best_objective)
        << ',' << h.stall_count << '\n';
}

}  // namespace cca
