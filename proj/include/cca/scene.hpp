#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cca/error.hpp"
#include "cca/objective.hpp"
#include "cca/seed.hpp"
#include "cca/texture.hpp"

namespace cca {

inline constexpr int kLocationCount = 36;
inline constexpr int kTrainLocationCount = 18;
inline constexpr int kOrientationCount = 20;

enum class Split { train, test };

inline const char* to_string(Split s) noexcept { return s == Split::train ? "train" : "test"; }

inline Split split_for_location(int location_id) noexcept {
  return location_id < kTrainLocationCount ? Split::train : Split::test;
}

/// One rendering condition: where the painted vehicle stands, where the
/// camera looks from, and how the scene is lit.
struct Transformation {
  int location_id = 0;
  int orientation_id = 0;
  double lighting = 0.5;
  Split split = Split::train;

  bool operator==(const Transformation&) const = default;
};

inline void validate(const Transformation& t) {
  if (t.location_id < 0 || t.location_id >= kLocationCount)
    throw Error(ErrorKind::unknown_transformation, "location_id " + std::to_string(t.location_id) + " outside [0,36)");
  if (t.orientation_id < 0 || t.orientation_id >= kOrientationCount)
    throw Error(ErrorKind::unknown_transformation,
                "orientation_id " + std::to_string(t.orientation_id) + " outside [0,20)");
  if (!(t.lighting >= 0.0 && t.lighting <= 1.0))
    throw Error(ErrorKind::unknown_transformation, "lighting outside [0,1]");
  if (t.split != split_for_location(t.location_id))
    throw Error(ErrorKind::unknown_transformation, "split label does not match location");
}

/// Full 36 x 20 grid; lighting is one seeded scalar per location.
inline std::vector<Transformation> build_transformation_grid(std::uint64_t seed) {
  std::vector<Transformation> grid;
  grid.reserve(kLocationCount * kOrientationCount);
  const SeedStream lighting(mix_seed(seed, {0x11947u}));
  for (int loc = 0; loc < kLocationCount; ++loc) {
    const double light = lighting.unit(static_cast<std::uint64_t>(loc));
    for (int orient = 0; orient < kOrientationCount; ++orient)
      grid.push_back({loc, orient, light, split_for_location(loc)});
  }
  return grid;
}

inline std::vector<Transformation> filter_split(const std::vector<Transformation>& set, Split split) {
  std::vector<Transformation> out;
  for (const auto& t : set)
    if (t.split == split) out.push_back(t);
  return out;
}

inline void require_unique(const std::vector<Transformation>& set) {
  std::set<std::pair<int, int>> seen;
  for (const auto& t : set)
    if (!seen.emplace(t.location_id, t.orientation_id).second)
      throw Error(ErrorKind::config, "duplicate transformation (" + std::to_string(t.location_id) + "," +
                                         std::to_string(t.orientation_id) + ")");
}

struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
           x_min < x_max && y_min < y_max;
  }

  bool operator==(const Box&) const = default;
};

struct Detection {
  double confidence = 0.0;
  Box box;
  bool is_camouflaged = false;

  bool operator==(const Detection&) const = default;
};

struct GroundTruth {
  int vehicle_id = 0;
  Box box;
  bool is_camouflaged = false;

  bool operator==(const GroundTruth&) const = default;
};

/// Output of one black-box evaluation of a pattern under a transformation.
struct SceneScore {
  std::vector<Detection> detections;
  std::vector<GroundTruth> ground_truth;
  bool no_detection = false;

  std::vector<double> unpainted_confidences() const {
    std::vector<double> out;
    for (const auto& d : detections)
      if (!d.is_camouflaged) out.push_back(d.confidence);
    return out;
  }

  bool operator==(const SceneScore&) const = default;
};

inline void validate(const SceneScore& s) {
  for (std::size_t i = 0; i < s.detections.size(); ++i) {
    const auto& d = s.detections[i];
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      throw Error(ErrorKind::domain, "detection " + std::to_string(i) + " confidence outside [0,1]");
    if (!d.box.valid()) throw Error(ErrorKind::invalid_box, "detection " + std::to_string(i) + " has an invalid box");
  }
  for (std::size_t i = 0; i < s.ground_truth.size(); ++i)
    if (!s.ground_truth[i].box.valid())
      throw Error(ErrorKind::invalid_box, "ground truth " + std::to_string(i) + " has an invalid box");
}

/// S~_t: mean confidence over unpainted-vehicle detections.
inline VehicleMean scene_mean_score(const SceneScore& s) {
  const auto conf = s.unpainted_confidences();
  return mean_vehicle_score(conf);
}

enum class Concurrency { concurrent, serialized };

/// The paint -> photograph -> detect black box.
class SceneScorer {
 public:
  virtual ~SceneScorer() = default;
  virtual SceneScore score(const CamouflagePattern& pattern, const Transformation& t) const = 0;
  virtual Concurrency concurrency() const noexcept = 0;
};

/// Calls the scorer and enforces the output contract.
inline SceneScore score_scene(const SceneScorer& scorer, const CamouflagePattern& pattern, const Transformation& t) {
  SceneScore s = scorer.score(pattern, t);
  validate(s);
  if (s.unpainted_confidences().empty()) s.no_detection = true;
  return s;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json box_to_json(const Box& b) { return nlohmann::json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

inline nlohmann::json transformation_to_json(const Transformation& t) {
  return {{"location_id", t.location_id}, {"orientation_id", t.orientation_id}, {"lighting", t.lighting}};
}

inline nlohmann::json transformations_to_json(const std::vector<Transformation>& set) {
  auto arr = nlohmann::json::array();
  for (const auto& t : set) {
    auto j = transformation_to_json(t);
    j["split"] = to_string(t.split);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::json scene_score_to_json(const SceneScore& s) {
  auto dets = nlohmann::json::array();
  for (const auto& d : s.detections)
    dets.push_back({{"confidence", d.confidence}, {"box", box_to_json(d.box)}, {"is_camouflaged", d.is_camouflaged}});
  auto gts = nlohmann::json::array();
  for (const auto& g : s.ground_truth)
    gts.push_back({{"vehicle_id", g.vehicle_id}, {"box", box_to_json(g.box)}, {"is_camouflaged", g.is_camouflaged}});
  return {{"detections", std::move(dets)}, {"ground_truth", std::move(gts)}};
}

}  // namespace cca
