#include "bdc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

namespace bdc {

void SynthConfig::validate() const {
  if (!(image_width >= 1.0) || !(image_height >= 1.0)) throw std::invalid_argument("synth: image size must be >= 1");
  if (objects < 1 || classes < 1 || duplicates < 1) throw std::invalid_argument("synth: counts must be >= 1");
  if (!(jitter >= 0.0) || !(heatmap_noise >= 0.0)) throw std::invalid_argument("synth: sigmas must be >= 0");
  if (!(score_iou_weight >= 0.0 && score_iou_weight <= 1.0)) {
    throw std::invalid_argument("synth: score-IoU weight must lie in [0,1]");
  }
  if (!(stride > 0.0)) throw std::invalid_argument("synth: stride must be positive");
  if (!(max_gt_overlap >= 0.0 && max_gt_overlap <= 1.0)) throw std::invalid_argument("synth: max_gt_overlap must lie in [0,1]");
  if (!(min_box_fraction > 0.0 && min_box_fraction <= max_box_fraction && max_box_fraction <= 1.0)) {
    throw std::invalid_argument("synth: box fractions must satisfy 0 < min <= max <= 1");
  }
}

namespace {

// std::mt19937_64's sequence is fixed by the standard; the distributions are
// not, so the transforms below are spelled out for byte-stable scenes.
class SceneRng {
 public:
  SceneRng(std::uint64_t seed, std::uint64_t index) : engine_(mix(seed ^ mix(index + 0x9e3779b97f4a7c15ULL))) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

BBox jittered(const BBox& gt, double sigma, double w, double h, SceneRng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    BBox b{gt.x1 + sigma * rng.normal(), gt.y1 + sigma * rng.normal(), gt.x2 + sigma * rng.normal(),
           gt.y2 + sigma * rng.normal()};
    b.x1 = std::clamp(b.x1, 0.0, w);
    b.x2 = std::clamp(b.x2, 0.0, w);
    b.y1 = std::clamp(b.y1, 0.0, h);
    b.y2 = std::clamp(b.y2, 0.0, h);
    if (b.width() >= 1.0 && b.height() >= 1.0) return b;
  }
  return gt;
}

}  // namespace

GridDims synth_grid_dims(const SynthConfig& cfg) {
  return {static_cast<std::size_t>(std::ceil(cfg.image_height / cfg.stride)),
          static_cast<std::size_t>(std::ceil(cfg.image_width / cfg.stride))};
}

std::string synth_image_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%06zu", index);
  return buf;
}

SynthScene synth_scene(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  SceneRng rng(cfg.seed, index);
  SynthScene scene;
  scene.image_id = synth_image_id(index);

  const double w = cfg.image_width;
  const double h = cfg.image_height;
  std::vector<ClassBox> targets;
  for (std::size_t i = 0; i < cfg.objects; ++i) {
    BBox box;
    for (int attempt = 0; attempt < 32; ++attempt) {
      const double bw = std::max(1.0, rng.uniform(cfg.min_box_fraction, cfg.max_box_fraction) * w);
      const double bh = std::max(1.0, rng.uniform(cfg.min_box_fraction, cfg.max_box_fraction) * h);
      const double x1 = rng.uniform(0.0, std::max(0.0, w - bw));
      const double y1 = rng.uniform(0.0, std::max(0.0, h - bh));
      box = {x1, y1, std::min(w, x1 + bw), std::min(h, y1 + bh)};
      const bool crowded = std::any_of(scene.gts.begin(), scene.gts.end(), [&](const GroundTruth& g) {
        return iou(g.box, box) > cfg.max_gt_overlap;
      });
      if (!crowded) break;
    }
    const std::size_t cls = rng.below(cfg.classes);
    scene.gts.push_back({scene.image_id, cls, box});
    targets.push_back({cls, box});
  }

  for (std::size_t g = 0; g < scene.gts.size(); ++g) {
    const GroundTruth& gt = scene.gts[g];
    for (std::size_t k = 0; k < cfg.duplicates; ++k) {
      const BBox box = jittered(gt.box, cfg.jitter, w, h, rng);
      const double u = rng.uniform();
      const double s = std::clamp(cfg.score_iou_weight * iou(box, gt.box) + (1.0 - cfg.score_iou_weight) * u,
                                  0.0, 1.0);
      scene.detections.push_back({gt.class_id, s, box});
      scene.detection_source.push_back(g);
    }
  }

  const CornerHeatmap clean =
      encode_corner_heatmaps(targets, cfg.classes, synth_grid_dims(cfg), cfg.stride, cfg.gaussian);
  if (cfg.heatmap_noise == 0.0) {
    scene.heatmap = clean;
  } else {
    ClassGrid tl = clean.tl();
    ClassGrid br = clean.br();
    for (ClassGrid* g : {&tl, &br}) {
      for (float& v : g->values()) {
        v = std::clamp(static_cast<float>(v + cfg.heatmap_noise * rng.normal()), 0.0f, 1.0f);
      }
    }
    scene.heatmap = CornerHeatmap(std::move(tl), std::move(br), cfg.stride);
  }
  return scene;
}

std::vector<SynthScene> synth_scenes(const SynthConfig& cfg, std::size_t count) {
  std::vector<SynthScene> scenes;
  scenes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) scenes.push_back(synth_scene(cfg, i));
  return scenes;
}

namespace {

void append(std::vector<EvalDetection>& out, const std::string& image,
            const std::vector<ScoredDetection>& dets) {
  for (const ScoredDetection& d : dets) out.push_back({image, d.detection.class_id, d.score, d.detection.box});
}

}  // namespace

StrategyComparison compare_strategies(std::span<const SynthScene> scenes,
                                      std::span<const BdcConfig> configs,
                                      const BdcConfig& baseline) {
  if (scenes.empty()) throw std::invalid_argument("compare_strategies: need at least one scene");
  std::vector<GroundTruth> gts;
  for (const SynthScene& s : scenes) gts.insert(gts.end(), s.gts.begin(), s.gts.end());

  StrategyComparison out;
  std::vector<EvalDetection> nms_dets;
  for (const SynthScene& s : scenes) append(nms_dets, s.image_id, plain_nms(s.detections, baseline));
  out.nms = evaluate(gts, nms_dets);

  for (const BdcConfig& cfg : configs) {
    std::vector<EvalDetection> dets;
    for (const SynthScene& s : scenes) append(dets, s.image_id, bdc_pipeline(s.detections, s.heatmap, cfg));
    out.bdc.push_back(evaluate(gts, dets));
  }
  return out;
}

}  // namespace bdc
