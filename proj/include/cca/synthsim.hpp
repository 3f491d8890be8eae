#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cca/distribution.hpp"
#include "cca/error.hpp"
#include "cca/scene.hpp"
#include "cca/seed.hpp"
#include "cca/texture.hpp"

namespace cca {

// Synthetic stand-in for the renderer + detector: each unpainted vehicle's
// confidence is logistic(b_i + gain * <w_t, phi> / |w_t|_1 + noise), where phi
// is the pattern tiled over the vehicle surface and scaled to [0,1].

inline constexpr double kSynthGain = 4.0;
inline constexpr double kCamouflagedConfidence = 0.9;
inline constexpr double kMinBoxConfidence = 1e-9;

struct SynthVehicle {
  double bias = 0.0;
  Box box;
};

struct SynthTransformation {
  Transformation transformation;
  std::vector<double> weights;  // 3 * surface_width * surface_height
  std::vector<SynthVehicle> vehicles;
  Box camouflaged_box;
};

struct SynthSceneSpec {
  std::size_t pattern_width = 16;
  std::size_t pattern_height = 16;
  std::size_t surface_width = 32;
  std::size_t surface_height = 32;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  std::vector<SynthTransformation> scenes;

  void validate() const {
    if (pattern_width == 0 || pattern_height == 0 || surface_width == 0 || surface_height == 0)
      throw Error(ErrorKind::invalid_dimension, "synthetic scene dimensions must be positive");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw Error(ErrorKind::config, "noise_std must be >= 0");
    const std::size_t n = 3 * surface_width * surface_height;
    for (const auto& s : scenes) {
      if (s.weights.size() != n) throw Error(ErrorKind::invalid_dimension, "weight grid size mismatch");
      for (double w : s.weights)
        if (!std::isfinite(w)) throw Error(ErrorKind::config, "non-finite weight");
      if (s.vehicles.empty()) throw Error(ErrorKind::config, "scene without unpainted vehicles");
      for (const auto& v : s.vehicles)
        if (!v.box.valid()) throw Error(ErrorKind::invalid_box, "vehicle box invalid");
    }
  }

  const SynthTransformation& find(const Transformation& t) const {
    for (const auto& s : scenes)
      if (s.transformation.location_id == t.location_id && s.transformation.orientation_id == t.orientation_id)
        return s;
    throw Error(ErrorKind::unknown_transformation, "transformation (" + std::to_string(t.location_id) + "," +
                                                       std::to_string(t.orientation_id) + ") not in scene spec");
  }
};

struct SynthGenerationOptions {
  std::size_t pattern_width = 16;
  std::size_t pattern_height = 16;
  std::size_t surface_width = 32;
  std::size_t surface_height = 32;
  double noise_std = 0.0;
  double specific_weight_scale = 0.5;  // per-transformation deviation from the shared weights
};

namespace detail {

inline double seeded_normal(const SeedStream& s, std::uint64_t n) { return normal_quantile(s.unit(n)); }

inline Box seeded_box(const SeedStream& s, std::uint64_t n, double cx_lo, double cx_hi) {
  const double w = 40.0 + 120.0 * s.unit(n);
  const double h = 0.6 * w;
  const double cx = cx_lo + (cx_hi - cx_lo) * s.unit(n + 1);
  const double cy = 200.0 + 200.0 * s.unit(n + 2);
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

}  // namespace detail

/// Builds a seeded synthetic scene for the given transformations. The number
/// of unpainted vehicles is a per-location constant in [1, 4].
inline SynthSceneSpec make_synth_spec(const std::vector<Transformation>& transformations,
                                      const SynthGenerationOptions& opt, std::uint64_t seed) {
  SynthSceneSpec spec;
  spec.pattern_width = opt.pattern_width;
  spec.pattern_height = opt.pattern_height;
  spec.surface_width = opt.surface_width;
  spec.surface_height = opt.surface_height;
  spec.noise_std = opt.noise_std;
  spec.seed = seed;
  const std::size_t n = 3 * opt.surface_width * opt.surface_height;

  const SeedStream shared_stream(mix_seed(seed, {0x5a5a}));
  std::vector<double> shared(n);
  for (std::size_t i = 0; i < n; ++i) shared[i] = detail::seeded_normal(shared_stream, i);

  for (const auto& t : transformations) {
    validate(t);
    const auto loc = static_cast<std::uint64_t>(t.location_id);
    const auto orient = static_cast<std::uint64_t>(t.orientation_id);
    SynthTransformation scene;
    scene.transformation = t;
    const SeedStream wstream(mix_seed(seed, {0x77, loc, orient}));
    scene.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      scene.weights[i] = shared[i] + opt.specific_weight_scale * detail::seeded_normal(wstream, i);

    const SeedStream loc_stream(mix_seed(seed, {0x10c, loc}));
    const std::size_t vehicles = 1 + static_cast<std::size_t>(loc_stream.bits(0) % 4);
    const SeedStream vstream(mix_seed(seed, {0x7e4, loc, orient}));
    for (std::size_t v = 0; v < vehicles; ++v) {
      SynthVehicle vehicle;
      vehicle.bias = 0.5 * detail::seeded_normal(vstream, 10 * v) + (t.lighting - 0.5);
      vehicle.box = detail::seeded_box(vstream, 10 * v + 1, 80.0 + 120.0 * static_cast<double>(v),
                                       140.0 + 120.0 * static_cast<double>(v));
      scene.vehicles.push_back(vehicle);
    }
    scene.camouflaged_box = detail::seeded_box(vstream, 1000, 560.0, 600.0);
    spec.scenes.push_back(std::move(scene));
  }
  spec.validate();
  return spec;
}

/// Linear response <w_t, phi> / |w_t|_1 in [-1, 1] (0 for an all-zero weight grid).
inline double synth_linear_response(const SynthSceneSpec& spec, const SynthTransformation& scene,
                                    const CamouflagePattern& pattern) {
  double dot = 0.0;
  double l1 = 0.0;
  std::size_t i = 0;
  for (std::size_t y = 0; y < spec.surface_height; ++y)
    for (std::size_t x = 0; x < spec.surface_width; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch, ++i) {
        const double phi = pattern.at(x % pattern.width(), y % pattern.height(), ch) / kChannelMax;
        dot += scene.weights[i] * phi;
        l1 += std::abs(scene.weights[i]);
      }
  return l1 > 0.0 ? dot / l1 : 0.0;
}

inline double logistic(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

/// Predicted box: each side of the ground truth moves inward by 0.5 * (1 - s)
/// of the box extent, so the predicted extent is s times the true one.
inline Box shrink_box(const Box& gt, double confidence) {
  const double s = std::max(confidence, kMinBoxConfidence);
  const double dx = 0.5 * (1.0 - s) * gt.width();
  const double dy = 0.5 * (1.0 - s) * gt.height();
  return {gt.x_min + dx, gt.y_min + dy, gt.x_max - dx, gt.y_max - dy};
}

inline SceneScore synth_score(const SynthSceneSpec& spec, const CamouflagePattern& pattern, const Transformation& t) {
  if (pattern.width() != spec.pattern_width || pattern.height() != spec.pattern_height)
    throw Error(ErrorKind::invalid_dimension, "pattern shape does not match the synthetic scene");
  const auto& scene = spec.find(t);
  const double response = kSynthGain * synth_linear_response(spec, scene, pattern);
  const SeedStream noise(mix_seed(spec.seed, {0x6e01, static_cast<std::uint64_t>(t.location_id),
                                              static_cast<std::uint64_t>(t.orientation_id), pattern.hash()}));
  SceneScore out;
  int id = 0;
  for (std::size_t i = 0; i < scene.vehicles.size(); ++i, ++id) {
    const auto& v = scene.vehicles[i];
    const double eps = spec.noise_std > 0.0 ? spec.noise_std * detail::seeded_normal(noise, i) : 0.0;
    const double s = logistic(v.bias + response + eps);
    out.detections.push_back({s, shrink_box(v.box, s), false});
    out.ground_truth.push_back({id, v.box, false});
  }
  out.detections.push_back({kCamouflagedConfidence, scene.camouflaged_box, true});
  out.ground_truth.push_back({id, scene.camouflaged_box, true});
  return out;
}

/// Sum of the weights of every surface channel that samples pattern channel j.
inline std::vector<double> folded_weights(const SynthSceneSpec& spec, const SynthTransformation& scene) {
  std::vector<double> folded(3 * spec.pattern_width * spec.pattern_height, 0.0);
  std::size_t i = 0;
  for (std::size_t y = 0; y < spec.surface_height; ++y)
    for (std::size_t x = 0; x < spec.surface_width; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch, ++i) {
        const std::size_t px = x % spec.pattern_width;
        const std::size_t py = y % spec.pattern_height;
        folded[(py * spec.pattern_width + px) * 3 + ch] += scene.weights[i];
      }
  return folded;
}

/// Bound-corner pattern that minimises every unpainted-vehicle score under t.
/// Only defined for a noiseless spec.
inline CamouflagePattern analytic_optimum(const SynthSceneSpec& spec, const Transformation& t) {
  if (spec.noise_std > 0.0)
    throw Error(ErrorKind::oracle_refused, "analytic optimum is only defined for noise_std = 0");
  const auto folded = folded_weights(spec, spec.find(t));
  std::vector<double> channels(folded.size());
  for (std::size_t j = 0; j < folded.size(); ++j) channels[j] = folded[j] < 0.0 ? kChannelMax : kChannelMin;
  return CamouflagePattern(spec.pattern_width, spec.pattern_height, std::move(channels));
}

class SynthScorer final : public SceneScorer {
 public:
  explicit SynthScorer(SynthSceneSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  SceneScore score(const CamouflagePattern& pattern, const Transformation& t) const override {
    return synth_score(spec_, pattern, t);
  }
  Concurrency concurrency() const noexcept override { return Concurrency::concurrent; }

  const SynthSceneSpec& spec() const noexcept { return spec_; }

 private:
  SynthSceneSpec spec_;
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json synth_spec_to_json(const SynthSceneSpec& spec) {
  auto scenes = nlohmann::json::array();
  for (const auto& s : spec.scenes) {
    auto vehicles = nlohmann::json::array();
    for (const auto& v : s.vehicles) vehicles.push_back({{"bias", v.bias}, {"box", box_to_json(v.box)}});
    scenes.push_back({{"transformation", transformation_to_json(s.transformation)},
                      {"weights", s.weights},
                      {"vehicles", std::move(vehicles)},
                      {"camouflaged_box", box_to_json(s.camouflaged_box)}});
  }
  return {{"pattern_width", spec.pattern_width},
          {"pattern_height", spec.pattern_height},
          {"surface_width", spec.surface_width},
          {"surface_height", spec.surface_height},
          {"noise_std", spec.noise_std},
          {"gain", kSynthGain},
          {"seed", spec.seed},
          {"scenes", std::move(scenes)}};
}

inline SynthSceneSpec synth_spec_from_json(const nlohmann::json& j) {
  auto box = [](const nlohmann::json& b) {
    if (!b.is_array() || b.size() != 4) throw Error(ErrorKind::parse, "box must be [x_min,y_min,x_max,y_max]");
    return Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  };
  try {
    SynthSceneSpec spec;
    spec.pattern_width = j.at("pattern_width").get<std::size_t>();
    spec.pattern_height = j.at("pattern_height").get<std::size_t>();
    spec.surface_width = j.at("surface_width").get<std::size_t>();
    spec.surface_height = j.at("surface_height").get<std::size_t>();
    spec.noise_std = j.at("noise_std").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("scenes")) {
      SynthTransformation scene;
      const auto& t = s.at("transformation");
      scene.transformation.location_id = t.at("location_id").get<int>();
      scene.transformation.orientation_id = t.at("orientation_id").get<int>();
      scene.transformation.lighting = t.at("lighting").get<double>();
      scene.transformation.split = split_for_location(scene.transformation.location_id);
      scene.weights = s.at("weights").get<std::vector<double>>();
      for (const auto& v : s.at("vehicles")) scene.vehicles.push_back({v.at("bias").get<double>(), box(v.at("box"))});
      scene.camouflaged_box = box(s.at("camouflaged_box"));
      spec.scenes.push_back(std::move(scene));
    }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("synthetic scene spec: ") + e.what());
  }
}

}  // namespace cca
