#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lgan/tensor/tensor.hpp"

namespace lgan::metrics {

// Non-interpolated average precision: mean over positives of the precision
// at that positive's rank, scores sorted descending with ties kept in input
// order. Throws when labels contain no positive.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// Per-class AP over per-image score columns; classes without positives are
// reported as NaN and skipped in the mean.
struct MapResult {
  std::vector<double> per_class_ap;
  double map = 0.0;
};
MapResult mean_average_precision(const std::vector<std::vector<double>>& scores_per_class,
                                 const std::vector<std::vector<int>>& labels_per_class);

// Unrestricted Damerau-Levenshtein distance (adjacent transpositions that
// later edits may split). Symmetric.
int64_t dl_distance_raw(const std::vector<int64_t>& a, const std::vector<int64_t>& b);

// Raw distance divided by len(gt); gt must be non-empty.
double dl_distance(const std::vector<int64_t>& gt, const std::vector<int64_t>& pred);

using MaskMap = std::map<int64_t, Tensor<float>>;  // class id -> binary [1,H,W]

// Per-class IoU of predicted masks against amodal ground truth. Classes
// predicted but absent from gt score 0 and are excluded from the mean, which
// runs over the classes present in gt.
struct IouResult {
  std::map<int64_t, double> per_class;
  double mean = 0.0;
};
IouResult multilayer_miou(const MaskMap& pred, const MaskMap& gt_amodal);

// IoU restricted to the visible region (gt_visible[c]) and to the occluded
// remainder (gt_amodal[c] minus gt_visible[c]). Classes whose restricted
// region is empty are excluded from that mean.
struct OcclusionResult {
  double miou_visible = 0.0;
  double miou_occluded = 0.0;
  std::map<int64_t, double> per_class_visible;
  std::map<int64_t, double> per_class_occluded;
};
OcclusionResult occlusion_breakdown(const MaskMap& pred, const MaskMap& gt_amodal,
                                    const MaskMap& gt_visible);

struct EvalReport {
  std::vector<double> per_class_ap;  // NaN for classes with no positives
  double map = 0.0;
  double mean_dl = 0.0;
  std::vector<double> per_class_iou;  // NaN for classes never present
  double miou = 0.0;
  double miou_occluded = 0.0;
  double miou_visible = 0.0;
  int64_t n_images = 0;
};

std::string eval_report_to_json(const EvalReport& report);

}  // namespace lgan::metrics
