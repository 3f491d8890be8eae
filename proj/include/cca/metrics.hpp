#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cca/detail/format.hpp"
#include "cca/error.hpp"
#include "cca/scene.hpp"

namespace cca {

inline constexpr double kIouThreshold = 0.5;

/// Intersection over union of two half-open boxes.
inline double iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) throw Error(ErrorKind::invalid_box, "iou of a degenerate box");
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Best IoU over all (prediction, ground truth) pairs; 0 when nothing is predicted.
inline double image_iou(std::span<const Box> predictions, std::span<const Box> ground_truth) {
  if (ground_truth.empty()) throw Error(ErrorKind::no_ground_truth, "image has no ground-truth vehicles");
  double best = 0.0;
  for (const auto& p : predictions)
    for (const auto& g : ground_truth) best = std::max(best, iou(p, g));
  return best;
}

struct ImageMetrics {
  double mean_confidence = 0.0;
  double iou = 0.0;
  bool no_detection = false;
};

/// Per-image metrics restricted to unpainted vehicles.
inline ImageMetrics image_metrics(const SceneScore& s) {
  std::vector<Box> preds;
  std::vector<Box> gts;
  for (const auto& d : s.detections)
    if (!d.is_camouflaged) preds.push_back(d.box);
  for (const auto& g : s.ground_truth)
    if (!g.is_camouflaged) gts.push_back(g.box);
  const auto mean = scene_mean_score(s);
  return {mean.value, image_iou(preds, gts), mean.no_detection};
}

struct EvalReport {
  double detection_confidence = 0.0;  // percent
  double miou = 0.0;                  // percent
  double p_at_05 = 0.0;               // percent
  Split split = Split::train;
  std::string camouflage_label;
  std::size_t image_count = 0;
  std::size_t no_detection_count = 0;

  bool operator==(const EvalReport&) const = default;
};

inline EvalReport aggregate(std::span<const ImageMetrics> per_image, Split split = Split::train,
                            std::string label = {}) {
  if (per_image.empty()) throw Error(ErrorKind::empty_evaluation, "no images to aggregate");
  double conf = 0.0;
  double sum_iou = 0.0;
  std::size_t hits = 0;
  std::size_t none = 0;
  for (const auto& m : per_image) {
    conf += m.mean_confidence;
    sum_iou += m.iou;
    if (m.iou > kIouThreshold) ++hits;
    if (m.no_detection) ++none;
  }
  const double n = static_cast<double>(per_image.size());
  return {100.0 * conf / n, 100.0 * sum_iou / n, 100.0 * static_cast<double>(hits) / n,
          split,            std::move(label),    per_image.size(), none};
}

/// Metric-wise mean of several reports (used for the baseline rows).
inline EvalReport mean_report(std::span<const EvalReport> reports, std::string label) {
  if (reports.empty()) throw Error(ErrorKind::empty_evaluation, "no reports to average");
  EvalReport out;
  out.split = reports.front().split;
  out.camouflage_label = std::move(label);
  out.image_count = reports.front().image_count;
  for (const auto& r : reports) {
    out.detection_confidence += r.detection_confidence;
    out.miou += r.miou;
    out.p_at_05 += r.p_at_05;
    out.no_detection_count += r.no_detection_count;
  }
  const double n = static_cast<double>(reports.size());
  out.detection_confidence /= n;
  out.miou /= n;
  out.p_at_05 /= n;
  return out;
}

inline constexpr const char* kReportCsvHeader =
    "Camouflages,Split,Detection confidence(%),mIOU(%),P@0.5(%),Images,No-detection images";

inline void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : reports)
    out << r.camouflage_label << ',' << to_string(r.split) << ',' << detail::format_double(r.detection_confidence)
        << ',' << detail::format_double(r.miou) << ',' << detail::format_double(r.p_at_05) << ',' << r.image_count
        << ',' << r.no_detection_count << '\n';
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  return {{"Camouflages", r.camouflage_label},
          {"Split", to_string(r.split)},
          {"Detection confidence(%)", r.detection_confidence},
          {"mIOU(%)", r.miou},
          {"P@0.5(%)", r.p_at_05},
          {"Images", r.image_count},
          {"No-detection images", r.no_detection_count}};
}

}  // namespace cca
