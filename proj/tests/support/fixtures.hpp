#pragma once

#include <algorithm>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "bdc/evaluation.hpp"
#include "bdc/heatmap.hpp"
#include "bdc/postprocess.hpp"

namespace bdc::fixtures {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t below(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline BBox random_box(Rng& rng, double extent = 100.0, double min_side = 1.0, double max_side = 40.0) {
  const double w = uniform(rng, min_side, max_side);
  const double h = uniform(rng, min_side, max_side);
  const double x = uniform(rng, 0.0, extent - w);
  const double y = uniform(rng, 0.0, extent - h);
  return {x, y, x + w, y + h};
}

/// Clustered random detections: a few centres, jittered copies around them.
inline std::vector<Detection> random_detections(Rng& rng, std::size_t n, std::size_t classes,
                                                double extent = 100.0) {
  std::vector<Detection> out;
  std::vector<BBox> centres;
  const std::size_t k = std::max<std::size_t>(1, n / 5);
  for (std::size_t i = 0; i < k; ++i) centres.push_back(random_box(rng, extent, 8.0, 40.0));
  for (std::size_t i = 0; i < n; ++i) {
    const BBox& c = centres[below(rng, centres.size())];
    const double j = 0.15 * std::max(c.width(), c.height());
    BBox b{c.x1 + uniform(rng, -j, j), c.y1 + uniform(rng, -j, j), c.x2 + uniform(rng, -j, j),
           c.y2 + uniform(rng, -j, j)};
    if (b.x2 <= b.x1 + 0.5) b.x2 = b.x1 + 0.5;
    if (b.y2 <= b.y1 + 0.5) b.y2 = b.y1 + 0.5;
    out.push_back({below(rng, classes), uniform(rng, 0.0, 1.0), b});
  }
  return out;
}

/// Heatmap whose value is exactly 1 at the corners of every plain-NMS output
/// box, so that each cluster's best corner is its own prediction's.
inline CornerHeatmap self_peaked_heatmap(const std::vector<ScoredDetection>& kept, std::size_t channels,
                                         GridDims dims, double stride) {
  std::vector<ClassBox> peaks;
  for (const auto& k : kept) peaks.push_back({k.detection.class_id, k.detection.box});
  return encode_corner_heatmaps(peaks, channels, dims, stride);
}

struct EvalFixture {
  std::vector<GroundTruth> gts;
  std::vector<EvalDetection> dets;
};

/// Small multi-image, multi-class fixture with at most `max_dets` detections.
/// Scores are quantized so that ties occur.
inline EvalFixture random_eval_fixture(Rng& rng, std::size_t max_dets = 10) {
  EvalFixture f;
  const std::size_t images = 1 + below(rng, 3);
  const std::size_t classes = 1 + below(rng, 2);
  for (std::size_t im = 0; im < images; ++im) {
    const std::string id = "im" + std::to_string(im);
    const std::size_t n = below(rng, 4);
    for (std::size_t g = 0; g < n; ++g) f.gts.push_back({id, below(rng, classes), random_box(rng, 300.0, 10.0, 150.0)});
  }
  const std::size_t nd = below(rng, max_dets + 1);
  for (std::size_t d = 0; d < nd; ++d) {
    EvalDetection det;
    det.score = std::round(uniform(rng, 0.0, 1.0) * 10.0) / 10.0;
    if (!f.gts.empty() && uniform(rng, 0.0, 1.0) < 0.7) {
      const GroundTruth& g = f.gts[below(rng, f.gts.size())];
      const double j = 0.2 * std::max(g.box.width(), g.box.height());
      det.image_id = g.image_id;
      det.class_id = uniform(rng, 0.0, 1.0) < 0.9 ? g.class_id : below(rng, classes);
      det.box = {g.box.x1 + uniform(rng, -j, j), g.box.y1 + uniform(rng, -j, j), g.box.x2 + uniform(rng, -j, j),
                 g.box.y2 + uniform(rng, -j, j)};
      if (det.box.x2 <= det.box.x1) det.box.x2 = det.box.x1 + 1.0;
      if (det.box.y2 <= det.box.y1) det.box.y2 = det.box.y1 + 1.0;
    } else {
      det.image_id = "im" + std::to_string(below(rng, images));
      det.class_id = below(rng, classes);
      det.box = random_box(rng, 300.0, 10.0, 150.0);
    }
    f.dets.push_back(det);
  }
  return f;
}

}  // namespace bdc::fixtures
