#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "cca/evolve.hpp"
#include "cca/synthsim.hpp"

using namespace cca;

namespace {

// Every unpainted vehicle gets the same confidence, a fixed function of the pattern.
template <typename F>
class FunctionScorer final : public SceneScorer {
 public:
  explicit FunctionScorer(F f, Concurrency c = Concurrency::concurrent) : f_(std::move(f)), c_(c) {}
  SceneScore score(const CamouflagePattern& p, const Transformation&) const override {
    SceneScore s;
    s.detections = {{f_(p), {0, 0, 10, 10}, false}};
    s.ground_truth = {{0, {0, 0, 10, 10}, false}};
    return s;
  }
  Concurrency concurrency() const noexcept override { return c_; }

 private:
  F f_;
  Concurrency c_;
};

template <typename F>
FunctionScorer<F> make_scorer(F f, Concurrency c = Concurrency::concurrent) {
  return FunctionScorer<F>(std::move(f), c);
}

class FailingScorer final : public SceneScorer {
 public:
  SceneScore score(const CamouflagePattern&, const Transformation& t) const override {
    if (t.orientation_id == 1) throw Error(ErrorKind::transport, "scene service down");
    SceneScore s;
    s.detections = {{0.5, {0, 0, 1, 1}, false}};
    return s;
  }
  Concurrency concurrency() const noexcept override { return Concurrency::concurrent; }
};

OptimizerConfig base_config(std::vector<Transformation> ts) {
  OptimizerConfig c;
  c.transformations = std::move(ts);
  c.lambda = 8;
  c.sigma = 10.0;
  c.alpha = 1000.0;
  c.max_iterations = 20;
  c.patience = 100;
  c.base_seed = 11;
  c.threads = 4;
  return c;
}

std::vector<Transformation> first_transformations(std::size_t n) {
  auto grid = filter_split(build_transformation_grid(1), Split::train);
  grid.resize(n);
  return grid;
}

SynthScorer synth_scorer(const std::vector<Transformation>& ts, double noise, std::size_t w = 8, std::size_t h = 8) {
  return SynthScorer(make_synth_spec(ts, {w, h, w, h, noise, 0.5}, 5));
}

}  // namespace

TEST(EstimateGradient, HandComputedTwoCandidateExample) {
  const auto c = solid(1, 1, {128, 128, 128});
  const SearchDistribution dist{c, 1.0, 2};
  const std::vector<CamouflagePattern> candidates{CamouflagePattern(1, 1, {129, 128, 128}),
                                                  CamouflagePattern(1, 1, {127, 128, 128})};
  EvaluationGrid grid(2, 1);
  grid.set(0, 0, 0.8);
  grid.set(1, 0, 0.2);
  const auto g = estimate_gradient(dist, grid, candidates);
  // beta = +-1/sqrt(2); H = ln 5, ln 1.25; (b0*H0*1 + b1*H1*(-1)) / 2.
  EXPECT_NEAR(g[0], 0.6479153900465997, 1e-12);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_EQ(g[2], 0.0);
}

TEST(EstimateGradient, EqualScoresGiveZeroGradient) {
  const auto c = new_random(2, 2, 1);
  const SearchDistribution dist{c, 5.0, 4};
  std::vector<CamouflagePattern> candidates;
  for (std::uint64_t k = 0; k < 4; ++k) candidates.push_back(sample(dist, 3, k));
  EvaluationGrid grid(4, 2);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t t = 0; t < 2; ++t) grid.set(k, t, 0.37);
  const auto g = estimate_gradient(dist, grid, candidates);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(EstimateGradient, SymmetricCandidatesWithEqualScoresCancel) {
  const auto c = solid(1, 1, {100, 100, 100});
  const SearchDistribution dist{c, 2.0, 2};
  const std::vector<CamouflagePattern> candidates{CamouflagePattern(1, 1, {105, 98, 100}),
                                                  CamouflagePattern(1, 1, {95, 102, 100})};
  EvaluationGrid grid(2, 1);
  grid.set(0, 0, 0.6);
  grid.set(1, 0, 0.6);
  const auto g = estimate_gradient(dist, grid, candidates);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(EstimateGradient, MissingCellIsAnError) {
  const auto c = solid(1, 1, {100, 100, 100});
  const SearchDistribution dist{c, 2.0, 2};
  const std::vector<CamouflagePattern> candidates{c, c};
  EvaluationGrid grid(2, 2);
  grid.set(0, 0, 0.1);
  grid.set(0, 1, 0.1);
  grid.set(1, 0, 0.1);
  try {
    (void)estimate_gradient(dist, grid, candidates);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::incomplete_evaluation);
  }
}

TEST(EstimateGradient, MatchesDirectDoubleSum) {
  // Independent route: accumulate the double sum term by term.
  const auto c = new_random(2, 1, 4);
  const SearchDistribution dist{c, 7.0, 5};
  std::vector<CamouflagePattern> cand;
  for (std::uint64_t k = 0; k < 5; ++k) cand.push_back(sample(dist, 9, k));
  EvaluationGrid grid(5, 3);
  const double s[5][3] = {{0.1, 0.2, 0.3}, {0.9, 0.8, 0.7}, {0.5, 0.5, 0.4}, {0.05, 0.6, 0.2}, {0.33, 0.1, 0.99}};
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t t = 0; t < 3; ++t) grid.set(k, t, s[k][t]);
  std::vector<double> means(5);
  for (std::size_t k = 0; k < 5; ++k) means[k] = (s[k][0] + s[k][1] + s[k][2]) / 3.0;
  double mu = 0;
  for (double m : means) mu += m / 5.0;
  double var = 0;
  for (double m : means) var += (m - mu) * (m - mu) / 4.0;
  const auto g = estimate_gradient(dist, grid, cand);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double expected = 0.0;
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t k = 0; k < 5; ++k)
        expected += (means[k] - mu) / std::sqrt(var) * -std::log(1.0 - s[k][t]) *
                    (cand[k].channels()[i] - c.channels()[i]);
    expected /= 5.0 * 3.0 * 49.0;
    EXPECT_NEAR(g[i], expected, 1e-12);
  }
}

TEST(Step, ZeroGradientLeavesPatternAndCountsStall) {
  auto scorer = make_scorer([](const CamouflagePattern&) { return 0.4; });
  auto cfg = base_config(first_transformations(2));
  const auto init = new_random(4, 4, 2);
  const auto s0 = initial_state(cfg, scorer, init);
  const auto s1 = step(s0, cfg, scorer);
  EXPECT_EQ(s1.current, init);
  EXPECT_EQ(s1.stall_count, 1u);
  EXPECT_EQ(s1.iteration, 1u);
  EXPECT_EQ(s1.history.size(), 2u);
}

TEST(Step, ScorerFailureAbortsAndLeavesStateUnchanged) {
  auto cfg = base_config(first_transformations(3));
  auto ok = synth_scorer(cfg.transformations, 0.0, 4, 4);
  const auto s0 = initial_state(cfg, ok, new_random(4, 4, 1));
  const auto copy = s0;
  FailingScorer bad;
  try {
    (void)step(s0, cfg, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::transport);
  }
  EXPECT_EQ(s0, copy);
}

TEST(Step, EnhanceMovesOppositeToAttack) {
  auto cfg = base_config(first_transformations(2));
  cfg.alpha = 50.0;
  auto scorer = synth_scorer(cfg.transformations, 0.0);
  const auto init = clamp(ChannelGrid(8, 8, 128.0));
  const auto s0 = initial_state(cfg, scorer, init);
  const auto attack = step(s0, cfg, scorer);
  cfg.mode = Mode::enhance;
  const auto enhance = step(s0, cfg, scorer);
  double moved = 0.0;
  for (std::size_t i = 0; i < init.channel_count(); ++i) {
    const double da = attack.current.channels()[i] - 128.0;
    const double de = enhance.current.channels()[i] - 128.0;
    EXPECT_NEAR(da, -de, 1e-9);
    moved += std::abs(da);
  }
  EXPECT_GT(moved, 0.0);
}

TEST(Step, ModeDoesNotChangeCandidateSampling) {
  const auto mean = new_random(4, 4, 3);
  const SearchDistribution dist{mean, 10.0, 6};
  EXPECT_EQ(sample_population(dist, 77, 4), sample_population(dist, 77, 4));
}

TEST(Run, DeterministicAcrossThreadCounts) {
  auto cfg = base_config(first_transformations(3));
  auto scorer = synth_scorer(cfg.transformations, 0.02);
  const auto init = new_random(8, 8, 9);
  cfg.threads = 1;
  const auto a = run(cfg, scorer, init);
  cfg.threads = 8;
  const auto b = run(cfg, scorer, init);
  EXPECT_EQ(a.final_state, b.final_state);
  EXPECT_EQ(a.history, b.history);
}

TEST(Run, AttackDecreasesObjectiveOnSynthetic) {
  auto cfg = base_config(first_transformations(3));
  cfg.lambda = 20;
  cfg.max_iterations = 50;
  auto scorer = synth_scorer(cfg.transformations, 0.0, 16, 16);
  const auto r = run(cfg, scorer, new_random(16, 16, 1));
  ASSERT_EQ(r.history.size(), 51u);
  EXPECT_LT(r.history.back().objective, r.history.front().objective);
}

TEST(Run, EnhanceIncreasesObjectiveOnSynthetic) {
  auto cfg = base_config(first_transformations(3));
  cfg.mode = Mode::enhance;
  cfg.lambda = 20;
  cfg.max_iterations = 50;
  auto scorer = synth_scorer(cfg.transformations, 0.02, 16, 16);
  const auto r = run(cfg, scorer, new_random(16, 16, 1));
  EXPECT_GT(r.history.back().objective, r.history.front().objective);
  EXPECT_GT(r.best_objective, r.history.front().objective);
}

TEST(Run, ConstantScorerStopsWithinPatience) {
  auto scorer = make_scorer([](const CamouflagePattern&) { return 0.25; });
  auto cfg = base_config(first_transformations(1));
  cfg.patience = 1;
  cfg.max_iterations = 100;
  const auto r = run(cfg, scorer, new_random(2, 2, 1));
  EXPECT_LE(r.final_state.iteration, 2u);
}

TEST(Run, ZeroBudgetReturnsInitial) {
  auto cfg = base_config(first_transformations(2));
  cfg.max_iterations = 0;
  auto scorer = synth_scorer(cfg.transformations, 0.0, 4, 4);
  const auto init = new_random(4, 4, 5);
  const auto r = run(cfg, scorer, init);
  EXPECT_EQ(r.best, init);
  EXPECT_EQ(r.history.size(), 1u);
}

TEST(Run, StateInvariantsHoldEveryIteration) {
  for (Mode mode : {Mode::attack, Mode::enhance}) {
    auto cfg = base_config(first_transformations(2));
    cfg.mode = mode;
    cfg.alpha = 20000.0;  // large steps push channels onto the bounds
    cfg.max_iterations = 15;
    auto scorer = synth_scorer(cfg.transformations, 0.05);
    run(cfg, scorer, new_random(8, 8, 2), [&](const SearchState& s) {
      EXPECT_EQ(s.history.size(), s.iteration + 1);
      for (double v : s.current.channels()) ASSERT_TRUE(v >= 0.0 && v <= 255.0);
      for (const auto& h : s.history) {
        if (mode == Mode::attack)
          EXPECT_LE(s.best_objective, h.objective);
        else
          EXPECT_GE(s.best_objective, h.objective);
      }
    });
  }
}

TEST(Run, SerializedScorerIsNeverCalledConcurrently) {
  std::atomic<int> inside{0};
  std::atomic<int> max_inside{0};
  auto scorer = make_scorer(
      [&](const CamouflagePattern& p) {
        const int now = ++inside;
        int prev = max_inside.load();
        while (now > prev && !max_inside.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::microseconds(50));
        --inside;
        return p.channels()[0] / 255.0;
      },
      Concurrency::serialized);
  auto cfg = base_config(first_transformations(3));
  cfg.max_iterations = 3;
  cfg.threads = 8;
  (void)run(cfg, scorer, new_random(2, 2, 1));
  EXPECT_EQ(max_inside.load(), 1);
}

TEST(Run, ConfigValidation) {
  auto scorer = make_scorer([](const CamouflagePattern&) { return 0.5; });
  const auto init = new_random(2, 2, 1);
  auto cfg = base_config(first_transformations(1));
  cfg.alpha = 0.0;
  EXPECT_THROW((void)run(cfg, scorer, init), Error);
  cfg = base_config({});
  EXPECT_THROW((void)run(cfg, scorer, init), Error);
  cfg = base_config(first_transformations(1));
  cfg.patience = 0;
  EXPECT_THROW((void)run(cfg, scorer, init), Error);
  cfg = base_config(first_transformations(1));
  cfg.lambda = 1;
  EXPECT_THROW((void)run(cfg, scorer, init), Error);
}

TEST(History, CsvFormat) {
  std::ostringstream out;
  const std::vector<HistoryEntry> h{{0, 0.5, 0.5, 0}, {1, 0.25, 0.25, 0}};
  write_history_csv(out, h);
  EXPECT_EQ(out.str(), "iteration,objective,best_objective,stall_count\n0,0.5,0.5,0\n1,0.25,0.25,0\n");
}
