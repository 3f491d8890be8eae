#include <set>
#include <utility>

#include <gtest/gtest.h>

#include "cca/scene.hpp"

using namespace cca;

TEST(Scene, GridHas720TransformationsAnd360Train) {
  const auto grid = build_transformation_grid(1);
  EXPECT_EQ(grid.size(), 720u);
  EXPECT_EQ(filter_split(grid, Split::train).size(), 360u);
  EXPECT_EQ(filter_split(grid, Split::test).size(), 360u);
}

TEST(Scene, GridIsDeterministic) { EXPECT_EQ(build_transformation_grid(5), build_transformation_grid(5)); }

TEST(Scene, GridPairsUniqueAndSplitByLocation) {
  const auto grid = build_transformation_grid(3);
  std::set<std::pair<int, int>> seen;
  for (const auto& t : grid) {
    EXPECT_TRUE(seen.emplace(t.location_id, t.orientation_id).second);
    EXPECT_EQ(t.split, t.location_id < 18 ? Split::train : Split::test);
    EXPECT_GE(t.lighting, 0.0);
    EXPECT_LE(t.lighting, 1.0);
    EXPECT_NO_THROW(validate(t));
  }
  EXPECT_NO_THROW(require_unique(grid));
}

TEST(Scene, LightingIsPerLocation) {
  const auto grid = build_transformation_grid(3);
  for (const auto& t : grid) EXPECT_EQ(t.lighting, grid[static_cast<std::size_t>(t.location_id) * 20].lighting);
  EXPECT_NE(grid[0].lighting, grid[20].lighting);
}

TEST(Scene, SplitsPartitionTheGrid) {
  const auto grid = build_transformation_grid(9);
  const auto train = filter_split(grid, Split::train);
  const auto test = filter_split(grid, Split::test);
  std::set<std::pair<int, int>> a, b;
  for (const auto& t : train) a.emplace(t.location_id, t.orientation_id);
  for (const auto& t : test) b.emplace(t.location_id, t.orientation_id);
  for (const auto& p : a) EXPECT_FALSE(b.contains(p));
  EXPECT_EQ(a.size() + b.size(), grid.size());
}

TEST(Scene, DuplicatePairsRejected) {
  std::vector<Transformation> set{{1, 2, 0.5, Split::train}, {1, 2, 0.7, Split::train}};
  EXPECT_THROW(require_unique(set), Error);
}

TEST(Scene, TransformationValidation) {
  EXPECT_THROW(validate(Transformation{36, 0, 0.5, Split::test}), Error);
  EXPECT_THROW(validate(Transformation{0, 20, 0.5, Split::train}), Error);
  EXPECT_THROW(validate(Transformation{0, 0, 1.5, Split::train}), Error);
  EXPECT_THROW(validate(Transformation{20, 0, 0.5, Split::train}), Error);
}

namespace {

class FixedScorer final : public SceneScorer {
 public:
  explicit FixedScorer(SceneScore s) : s_(std::move(s)) {}
  SceneScore score(const CamouflagePattern&, const Transformation&) const override { return s_; }
  Concurrency concurrency() const noexcept override { return Concurrency::serialized; }

 private:
  SceneScore s_;
};

}  // namespace

TEST(Scene, ScoreSceneEnforcesContract) {
  const auto p = solid(1, 1, {0, 0, 0});
  const Transformation t{0, 0, 0.5, Split::train};

  SceneScore bad_conf;
  bad_conf.detections = {{1.3, {0, 0, 1, 1}, false}};
  EXPECT_THROW((void)score_scene(FixedScorer(bad_conf), p, t), Error);

  SceneScore bad_box;
  bad_box.detections = {{0.3, {0, 0, 0, 1}, false}};
  try {
    (void)score_scene(FixedScorer(bad_box), p, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_box);
  }

  SceneScore only_camo;
  only_camo.detections = {{0.9, {0, 0, 1, 1}, true}};
  const auto s = score_scene(FixedScorer(only_camo), p, t);
  EXPECT_TRUE(s.no_detection);
  const auto m = scene_mean_score(s);
  EXPECT_EQ(m.value, 0.0);
  EXPECT_TRUE(m.no_detection);
}

TEST(Scene, CamouflagedDetectionsExcludedFromMean) {
  SceneScore s;
  s.detections = {{0.2, {0, 0, 1, 1}, false}, {0.9, {0, 0, 1, 1}, true}, {0.4, {0, 0, 1, 1}, false}};
  EXPECT_DOUBLE_EQ(scene_mean_score(s).value, 0.3);
}

TEST(Scene, GridJsonExport) {
  const auto j = transformations_to_json(build_transformation_grid(2));
  ASSERT_EQ(j.size(), 720u);
  EXPECT_EQ(j[0].at("location_id"), 0);
  EXPECT_EQ(j[0].at("split"), "train");
  EXPECT_EQ(j[719].at("split"), "test");
  EXPECT_TRUE(j[5].contains("lighting"));
}
