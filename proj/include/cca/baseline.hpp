#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cca/detail/format.hpp"
#include "cca/detail/parallel.hpp"
#include "cca/metrics.hpp"
#include "cca/scene.hpp"
#include "cca/seed.hpp"
#include "cca/texture.hpp"

namespace cca {

struct NamedColor {
  const char* name;
  Rgb rgb;
};

inline constexpr std::array<NamedColor, 6> kBasicColors{{
    {"red", {255, 0, 0}},
    {"black", {0, 0, 0}},
    {"silver", {192, 192, 192}},
    {"grey", {128, 128, 128}},
    {"blue", {0, 0, 255}},
    {"white", {255, 255, 255}},
}};

inline constexpr std::size_t kRandomBaselineCount = 5;

inline constexpr const char* kBasicColorsLabel = "Basic colors";
inline constexpr const char* kRandomLabel = "Random camouflage";
inline constexpr const char* kOursLabel = "Ours";

struct NamedPattern {
  std::string name;
  CamouflagePattern pattern;
};

struct BaselineSuite {
  std::vector<NamedPattern> basic_colors;
  std::vector<NamedPattern> random_patterns;
};

inline BaselineSuite build_suite(std::size_t width, std::size_t height, std::uint64_t seed) {
  BaselineSuite suite;
  for (const auto& c : kBasicColors) suite.basic_colors.push_back({c.name, solid(width, height, c.rgb)});
  for (std::size_t i = 0; i < kRandomBaselineCount; ++i)
    suite.random_patterns.push_back(
        {"random-" + std::to_string(i), new_random(width, height, mix_seed(seed, {0xba5e, i}))});
  return suite;
}

/// Report for one pattern over the transformations of `split` in `grid`.
inline EvalReport evaluate_pattern(const CamouflagePattern& pattern, const SceneScorer& scorer,
                                   std::span<const Transformation> grid, Split split, std::string label,
                                   std::size_t threads = 1) {
  std::vector<Transformation> selected;
  for (const auto& t : grid)
    if (t.split == split) selected.push_back(t);
  if (selected.empty()) throw Error(ErrorKind::empty_evaluation, std::string("no transformations in split ") + to_string(split));
  std::vector<ImageMetrics> per_image(selected.size());
  const std::size_t workers = scorer.concurrency() == Concurrency::serialized ? 1 : threads;
  detail::parallel_for(selected.size(), workers, [&](std::size_t i) {
    per_image[i] = image_metrics(score_scene(scorer, pattern, selected[i]));
  });
  return aggregate(per_image, split, std::move(label));
}

/// Table rows for one split: basic colors (mean of six), random (mean of
/// five) and, when given, the learned pattern.
inline std::vector<EvalReport> evaluate_all(const BaselineSuite& suite, const std::optional<CamouflagePattern>& ours,
                                            const SceneScorer& scorer, std::span<const Transformation> grid,
                                            Split split, std::size_t threads = 1) {
  std::vector<EvalReport> colors;
  for (const auto& c : suite.basic_colors)
    colors.push_back(evaluate_pattern(c.pattern, scorer, grid, split, c.name, threads));
  std::vector<EvalReport> randoms;
  for (const auto& r : suite.random_patterns)
    randoms.push_back(evaluate_pattern(r.pattern, scorer, grid, split, r.name, threads));
  std::vector<EvalReport> rows{mean_report(colors, kBasicColorsLabel), mean_report(randoms, kRandomLabel)};
  if (ours) rows.push_back(evaluate_pattern(*ours, scorer, grid, split, kOursLabel, threads));
  return rows;
}

/// Comparison table: one row per camouflage, one column block per split.
/// `blocks` holds the rows of evaluate_all for each split, in the same row order.
inline void write_comparison_csv(std::ostream& out, std::span<const std::vector<EvalReport>> blocks) {
  out << "Camouflages";
  for (const auto& block : blocks) {
    const char* name = block.front().split == Split::train ? "Training set" : "Testing set";
    out << ',' << name << " Detection confidence(%)," << name << " mIOU(%)," << name << " P@0.5(%)";
  }
  out << '\n';
  if (blocks.empty()) return;
  for (std::size_t row = 0; row < blocks.front().size(); ++row) {
    out << blocks.front()[row].camouflage_label;
    for (const auto& block : blocks) {
      const auto& r = block.at(row);
      out << ',' << detail::format_double(r.detection_confidence) << ',' << detail::format_double(r.miou) << ','
          << detail::format_double(r.p_at_05);
    }
    out << '\n';
  }
}

}  // namespace cca
