#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdc/geometry.hpp"

namespace bdc {

/// COCO area ranges in original image pixels: small < 32^2, medium 32^2..96^2,
/// large > 96^2. Boundaries are inclusive on both sides, as in pycocotools.
enum class AreaRange { all, small, medium, large };

bool in_area_range(double area, AreaRange range);

struct GroundTruth {
  std::string image_id;
  std::size_t class_id = 0;
  BBox box;

  /// Narrowest range tag for the box area.
  AreaRange area_tag() const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct EvalDetection {
  std::string image_id;
  std::size_t class_id = 0;
  double score = 0.0;
  BBox box;

  friend bool operator==(const EvalDetection&, const EvalDetection&) = default;
};

struct EvalReport {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap_small = 0.0;
  double ap_medium = 0.0;
  double ap_large = 0.0;
  /// Mean IoU of true-positive matches at IoU 0.5 over all areas.
  double mean_matched_iou = 0.0;
  std::size_t n_images = 0;
  std::size_t n_dets = 0;
};

/// Greedy matching for one image and class. `dets` must already be sorted by
/// descending score. Each detection takes the unmatched ground truth of
/// highest IoU >= iou_thr (lowest index on ties).
std::vector<std::optional<std::size_t>> match_detections(std::span<const BBox> dets,
                                                         std::span<const BBox> gts,
                                                         double iou_thr);

struct ScoredMatch {
  double score = 0.0;
  bool true_positive = false;
};

/// 101-point interpolated AP of one PR curve. `matches` is ordered by
/// descending score (stable). Returns 0 when n_gt is 0.
double interpolated_ap(std::span<const ScoredMatch> matches, std::size_t n_gt);

/// IoU thresholds 0.50:0.05:0.95.
std::vector<double> coco_iou_thresholds();

struct EvalOptions {
  /// Detections kept per image and class, highest scores first.
  std::size_t max_dets = 100;
};

/// COCO-style evaluation across all images and classes.
EvalReport evaluate(std::span<const GroundTruth> gts, std::span<const EvalDetection> dets,
                    const EvalOptions& options = {});

}  // namespace bdc
