#include "bdc/evaluation.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace bdc {

bool in_area_range(double area, AreaRange range) {
  constexpr double kSmall = 32.0 * 32.0;
  constexpr double kLarge = 96.0 * 96.0;
  switch (range) {
    case AreaRange::all: return true;
    case AreaRange::small: return area <= kSmall;
    case AreaRange::medium: return area >= kSmall && area <= kLarge;
    case AreaRange::large: return area >= kLarge;
  }
  return false;
}

AreaRange GroundTruth::area_tag() const {
  const double a = box.area();
  if (a < 32.0 * 32.0) return AreaRange::small;
  if (a <= 96.0 * 96.0) return AreaRange::medium;
  return AreaRange::large;
}

namespace {

constexpr std::size_t kNoMatch = static_cast<std::size_t>(-1);

// pycocotools matching: non-ignored ground truths are preferred; a detection
// matched to an ignored ground truth is itself ignored.
struct FrameMatch {
  std::vector<std::size_t> det_to_gt;  // index into gts, or kNoMatch
};

FrameMatch greedy_match(std::size_t n_dets, std::size_t n_gts,
                        const std::vector<double>& ious,  // n_dets x n_gts
                        std::span<const char> gt_ignored,
                        std::span<const std::size_t> gt_order,  // non-ignored first
                        double thr) {
  FrameMatch fm{std::vector<std::size_t>(n_dets, kNoMatch)};
  std::vector<char> taken(n_gts, 0);
  for (std::size_t d = 0; d < n_dets; ++d) {
    double best = thr;
    std::size_t m = kNoMatch;
    for (std::size_t g : gt_order) {
      if (taken[g]) continue;
      if (m != kNoMatch && !gt_ignored[m] && gt_ignored[g]) break;
      const double v = ious[d * n_gts + g];
      if (v < best || (m != kNoMatch && v == best)) continue;
      best = v;
      m = g;
    }
    if (m != kNoMatch) {
      taken[m] = 1;
      fm.det_to_gt[d] = m;
    }
  }
  return fm;
}

}  // namespace

std::vector<std::optional<std::size_t>> match_detections(std::span<const BBox> dets,
                                                         std::span<const BBox> gts,
                                                         double iou_thr) {
  std::vector<double> ious(dets.size() * gts.size());
  for (std::size_t d = 0; d < dets.size(); ++d)
    for (std::size_t g = 0; g < gts.size(); ++g) ious[d * gts.size() + g] = iou(dets[d], gts[g]);
  const std::vector<char> ignored(gts.size(), 0);
  std::vector<std::size_t> order(gts.size());
  std::iota(order.begin(), order.end(), 0);
  const FrameMatch fm = greedy_match(dets.size(), gts.size(), ious, ignored, order, iou_thr);
  std::vector<std::optional<std::size_t>> out(dets.size());
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (fm.det_to_gt[d] != kNoMatch) out[d] = fm.det_to_gt[d];
  }
  return out;
}

double interpolated_ap(std::span<const ScoredMatch> matches, std::size_t n_gt) {
  if (n_gt == 0) return 0.0;
  const std::size_t n = matches.size();
  std::vector<double> recall(n), precision(n);
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (matches[i].true_positive ? tp : fp) += 1.0;
    recall[i] = tp / static_cast<double>(n_gt);
    precision[i] = tp / (tp + fp);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k * 0.01;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t(10);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 + static_cast<double>(i) * 0.05;
  return t;
}

namespace {

constexpr std::array<AreaRange, 4> kRanges = {AreaRange::all, AreaRange::small, AreaRange::medium,
                                              AreaRange::large};

struct Tagged {
  double score;
  std::size_t arrival;  // image order, then within-image rank
  bool tp;
};

// Accumulated PR evidence for one (class, area range).
struct CurveSet {
  std::size_t n_gt = 0;
  std::vector<std::vector<Tagged>> per_threshold;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport evaluate(std::span<const GroundTruth> gts, std::span<const EvalDetection> dets,
                    const EvalOptions& options) {
  const std::vector<double> thresholds = coco_iou_thresholds();
  const std::size_t n_thr = thresholds.size();

  std::set<std::string> images;
  using Key = std::pair<std::string, std::size_t>;
  std::map<Key, std::vector<std::size_t>> gt_groups, det_groups;
  std::set<std::size_t> classes;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    images.insert(gts[i].image_id);
    classes.insert(gts[i].class_id);
    gt_groups[{gts[i].image_id, gts[i].class_id}].push_back(i);
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    images.insert(dets[i].image_id);
    classes.insert(dets[i].class_id);
    det_groups[{dets[i].image_id, dets[i].class_id}].push_back(i);
  }

  std::map<std::size_t, std::array<CurveSet, kRanges.size()>> curves;
  for (std::size_t cls : classes) {
    for (auto& cs : curves[cls]) cs.per_threshold.resize(n_thr);
  }

  double matched_iou_sum = 0.0;
  std::size_t matched_count = 0;
  std::size_t arrival = 0;
  const std::vector<std::size_t> empty;

  for (const std::string& image : images) {
    for (std::size_t cls : classes) {
      const auto git = gt_groups.find({image, cls});
      const auto dit = det_groups.find({image, cls});
      const auto& g_idx = git == gt_groups.end() ? empty : git->second;
      std::vector<std::size_t> d_idx = dit == det_groups.end() ? empty : dit->second;
      if (g_idx.empty() && d_idx.empty()) continue;
      std::stable_sort(d_idx.begin(), d_idx.end(),
                       [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
      if (d_idx.size() > options.max_dets) d_idx.resize(options.max_dets);

      const std::size_t nd = d_idx.size();
      const std::size_t ng = g_idx.size();
      std::vector<double> ious(nd * ng);
      for (std::size_t d = 0; d < nd; ++d)
        for (std::size_t g = 0; g < ng; ++g)
          ious[d * ng + g] = iou(dets[d_idx[d]].box, gts[g_idx[g]].box);

      const std::size_t base = arrival;
      arrival += nd;
      auto& cls_curves = curves[cls];
      for (std::size_t r = 0; r < kRanges.size(); ++r) {
        const AreaRange range = kRanges[r];
        std::vector<char> ignored(ng);
        std::vector<std::size_t> order;
        for (std::size_t g = 0; g < ng; ++g) {
          ignored[g] = in_area_range(gts[g_idx[g]].box.area(), range) ? 0 : 1;
          if (!ignored[g]) order.push_back(g);
        }
        cls_curves[r].n_gt += order.size();
        for (std::size_t g = 0; g < ng; ++g)
          if (ignored[g]) order.push_back(g);

        for (std::size_t t = 0; t < n_thr; ++t) {
          const FrameMatch fm = greedy_match(nd, ng, ious, ignored, order, thresholds[t]);
          for (std::size_t d = 0; d < nd; ++d) {
            const std::size_t m = fm.det_to_gt[d];
            const bool skip = m != kNoMatch
                                  ? ignored[m] != 0
                                  : !in_area_range(dets[d_idx[d]].box.area(), range);
            if (skip) continue;
            cls_curves[r].per_threshold[t].push_back({dets[d_idx[d]].score, base + d, m != kNoMatch});
            if (range == AreaRange::all && t == 0 && m != kNoMatch) {
              matched_iou_sum += ious[d * ng + m];
              ++matched_count;
            }
          }
        }
      }
    }
  }

  // ap per range at each threshold, averaged over classes with ground truth.
  std::array<std::vector<std::vector<double>>, kRanges.size()> ap_by_range;  // [range][thr] -> classes
  for (auto& v : ap_by_range) v.resize(n_thr);
  std::vector<ScoredMatch> curve;
  for (auto& [cls, cls_curves] : curves) {
    for (std::size_t r = 0; r < kRanges.size(); ++r) {
      CurveSet& cs = cls_curves[r];
      if (cs.n_gt == 0) continue;
      for (std::size_t t = 0; t < n_thr; ++t) {
        auto& tagged = cs.per_threshold[t];
        std::sort(tagged.begin(), tagged.end(), [](const Tagged& a, const Tagged& b) {
          if (a.score != b.score) return a.score > b.score;
          return a.arrival < b.arrival;
        });
        curve.clear();
        for (const Tagged& x : tagged) curve.push_back({x.score, x.tp});
        ap_by_range[r][t].push_back(interpolated_ap(curve, cs.n_gt));
      }
    }
  }

  auto range_ap = [&](std::size_t r) {
    std::vector<double> all;
    for (const auto& per_cls : ap_by_range[r]) all.insert(all.end(), per_cls.begin(), per_cls.end());
    return mean_of(all);
  };

  EvalReport rep;
  rep.ap = range_ap(0);
  rep.ap50 = mean_of(ap_by_range[0][0]);
  rep.ap75 = mean_of(ap_by_range[0][5]);
  rep.ap_small = range_ap(1);
  rep.ap_medium = range_ap(2);
  rep.ap_large = range_ap(3);
  rep.mean_matched_iou = matched_count == 0 ? 0.0 : matched_iou_sum / static_cast<double>(matched_count);
  rep.n_images = images.size();
  rep.n_dets = dets.size();
  return rep;
}

}  // namespace bdc
