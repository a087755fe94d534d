#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdc/evaluation.hpp"
#include "bdc/heatmap.hpp"
#include "bdc/postprocess.hpp"

namespace bdc {

/// Synthetic detector output around random ground truth.
struct SynthConfig {
  std::uint64_t seed = 42;
  double image_width = 512.0;
  double image_height = 512.0;
  std::size_t objects = 6;
  std::size_t classes = 4;
  /// Std-dev (pixels) of the independent per-coordinate corner jitter.
  double jitter = 4.0;
  /// Detection score = clamp(w * IoU + (1 - w) * U(0,1), 0, 1).
  double score_iou_weight = 0.7;
  std::size_t duplicates = 20;
  double heatmap_noise = 0.0;
  double stride = 4.0;
  /// GT box side lengths are drawn uniformly from these fractions of the image side.
  double min_box_fraction = 0.06;
  double max_box_fraction = 0.35;
  /// Ground-truth boxes are resampled while their IoU with an earlier one exceeds this.
  double max_gt_overlap = 0.3;
  GaussianConfig gaussian;

  void validate() const;
};

struct SynthScene {
  std::string image_id;
  std::vector<GroundTruth> gts;
  std::vector<Detection> detections;
  /// Index into gts of the object each detection was jittered from.
  std::vector<std::size_t> detection_source;
  CornerHeatmap heatmap;
};

/// Grid dims covering the configured image at the configured stride.
GridDims synth_grid_dims(const SynthConfig& cfg);

/// Deterministic scene number `index` (seeded from cfg.seed and index).
SynthScene synth_scene(const SynthConfig& cfg, std::size_t index = 0);

std::vector<SynthScene> synth_scenes(const SynthConfig& cfg, std::size_t count);

/// Zero-padded image id used for scene `index`.
std::string synth_image_id(std::size_t index);

struct StrategyComparison {
  EvalReport nms;
  std::vector<EvalReport> bdc;  // aligned with the configs
};

/// Evaluates plain NMS (suppression settings from `baseline`) and
/// bdc_pipeline under each config over the same scenes.
StrategyComparison compare_strategies(std::span<const SynthScene> scenes,
                                      std::span<const BdcConfig> configs,
                                      const BdcConfig& baseline = {});

}  // namespace bdc
