#include "bdc/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace bdc {

CoupleStrategy::Kind CoupleStrategy::parse_kind(std::string_view text) {
  if (text == "max") return Kind::max;
  if (text == "top-n" || text == "top_n") return Kind::top_n;
  if (text == "all") return Kind::all;
  if (text == "threshold") return Kind::threshold;
  throw std::invalid_argument("unknown couple strategy '" + std::string(text) +
                              "' (expected max, top-n, all or threshold)");
}

std::string CoupleStrategy::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::max: os << "max"; break;
    case Kind::top_n: os << "top-n(" << n << ")"; break;
    case Kind::all: os << "all"; break;
    case Kind::threshold:
      if (adaptive) {
        os << "threshold(mean+std)";
      } else {
        os << "threshold(" << theta << ")";
      }
      break;
  }
  return os.str();
}

void BdcConfig::validate() const {
  if (!(iou_tau > 0.0 && iou_tau < 1.0)) throw std::invalid_argument("iou threshold must lie in (0,1)");
  if (!(score_floor >= 0.0 && score_floor < 1.0)) throw std::invalid_argument("score floor must lie in [0,1)");
  if (max_per_image < 1) throw std::invalid_argument("max per image must be at least 1");
  if (strategy.kind == CoupleStrategy::Kind::top_n && strategy.n < 1) {
    throw std::invalid_argument("top-n requires n >= 1");
  }
  if (strategy.kind == CoupleStrategy::Kind::threshold && !std::isfinite(strategy.theta)) {
    throw std::invalid_argument("threshold theta must be finite");
  }
  if (cocl_variant.kind == CoclVariant::Kind::weighted &&
      !(cocl_variant.alpha >= 0.0 && cocl_variant.alpha <= 1.0)) {
    throw std::invalid_argument("weighted CoCl alpha must lie in [0,1]");
  }
}

namespace {

// Uniform grid over one class's boxes; each box is registered in every cell it
// touches, so two boxes with positive-area intersection always share a cell.
class BoxBuckets {
 public:
  explicit BoxBuckets(std::span<const BBox> boxes) {
    const std::size_t m = boxes.size();
    min_x_ = min_y_ = std::numeric_limits<double>::infinity();
    double max_x = -min_x_;
    double max_y = -min_y_;
    double sum_extent = 0.0;
    for (const BBox& b : boxes) {
      min_x_ = std::min(min_x_, b.x1);
      min_y_ = std::min(min_y_, b.y1);
      max_x = std::max(max_x, b.x2);
      max_y = std::max(max_y, b.y2);
      sum_extent += std::max(b.width(), b.height());
    }
    cell_ = sum_extent / static_cast<double>(m);
    const double span_x = max_x - min_x_;
    const double span_y = max_y - min_y_;
    if (!(cell_ > 0.0) || !std::isfinite(cell_)) cell_ = std::max({span_x, span_y, 1.0});
    const double max_cells = 4.0 * static_cast<double>(m) + 16.0;
    for (;;) {
      cols_ = static_cast<std::size_t>(std::floor(span_x / cell_)) + 1;
      rows_ = static_cast<std::size_t>(std::floor(span_y / cell_)) + 1;
      if (static_cast<double>(cols_) * static_cast<double>(rows_) <= max_cells) break;
      cell_ *= 2.0;
    }

    std::vector<std::size_t> counts(rows_ * cols_ + 1, 0);
    for (const BBox& b : boxes) for_cells(b, [&](std::size_t c) { ++counts[c + 1]; });
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    offsets_ = counts;
    members_.resize(offsets_.back());
    for (std::size_t i = 0; i < m; ++i) {
      for_cells(boxes[i], [&](std::size_t c) { members_[counts[c]++] = i; });
    }
  }

  template <typename Fn>
  void for_cells(const BBox& b, Fn&& fn) const {
    const std::size_t c0 = col(b.x1), c1 = col(b.x2);
    const std::size_t r0 = row(b.y1), r1 = row(b.y2);
    for (std::size_t r = r0; r <= r1; ++r)
      for (std::size_t c = c0; c <= c1; ++c) fn(r * cols_ + c);
  }

  std::span<const std::size_t> bucket(std::size_t cell) const {
    return std::span<const std::size_t>(members_).subspan(offsets_[cell],
                                                          offsets_[cell + 1] - offsets_[cell]);
  }

 private:
  std::size_t col(double x) const { return index(x - min_x_, cols_); }
  std::size_t row(double y) const { return index(y - min_y_, rows_); }
  std::size_t index(double offset, std::size_t extent) const {
    const double f = std::floor(offset / cell_);
    if (!(f > 0.0)) return 0;
    if (f >= static_cast<double>(extent - 1)) return extent - 1;
    return static_cast<std::size_t>(f);
  }

  double min_x_ = 0.0;
  double min_y_ = 0.0;
  double cell_ = 1.0;
  std::size_t cols_ = 1;
  std::size_t rows_ = 1;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
};

// `group` holds input indices of one class in rank order.
void greedy_class_nms(std::span<const Detection> dets, std::span<const double> scores,
                      std::span<const std::size_t> group, double tau,
                      std::vector<std::pair<std::size_t, Cluster>>& out,
                      std::span<const std::size_t> rank_of) {
  const std::size_t m = group.size();
  std::vector<BBox> boxes(m);
  for (std::size_t i = 0; i < m; ++i) boxes[i] = dets[group[i]].box;
  const BoxBuckets buckets(boxes);

  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<char> suppressed(m, 0);
  std::vector<std::size_t> seen_by(m, kNone);
  std::vector<std::size_t> victims;
  auto member = [&](std::size_t local) {
    const std::size_t src = group[local];
    return ClusterMember{dets[src], scores[src], src};
  };

  for (std::size_t i = 0; i < m; ++i) {
    if (suppressed[i]) continue;
    victims.clear();
    buckets.for_cells(boxes[i], [&](std::size_t cell) {
      for (std::size_t j : buckets.bucket(cell)) {
        if (j <= i || suppressed[j] || seen_by[j] == i) continue;
        seen_by[j] = i;
        if (iou(boxes[i], boxes[j]) > tau) {
          suppressed[j] = 1;
          victims.push_back(j);
        }
      }
    });
    std::sort(victims.begin(), victims.end());
    Cluster cluster{member(i), {}};
    cluster.overlaps.reserve(victims.size());
    for (std::size_t j : victims) cluster.overlaps.push_back(member(j));
    out.emplace_back(rank_of[group[i]], std::move(cluster));
  }
}

std::size_t argmax_first(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

void check_detection(const Detection& d, std::size_t index) {
  if (!(d.score >= 0.0 && d.score <= 1.0)) {
    throw std::invalid_argument("detection " + std::to_string(index) + ": score outside [0,1]");
  }
  if (!d.box.non_degenerate()) {
    throw std::invalid_argument("detection " + std::to_string(index) +
                                ": box must be finite with positive area");
  }
}

/// Validates every detection, then drops those under the score floor.
std::vector<Detection> ingest(std::span<const Detection> dets, const BdcConfig& cfg,
                              std::optional<std::size_t> channels) {
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    check_detection(dets[i], i);
    if (channels && dets[i].class_id >= *channels) {
      throw std::out_of_range("detection " + std::to_string(i) + ": class " +
                              std::to_string(dets[i].class_id) + " >= heatmap channels " +
                              std::to_string(*channels));
    }
    if (dets[i].score >= cfg.score_floor) kept.push_back(dets[i]);
  }
  return kept;
}

}  // namespace

std::vector<Cluster> nms_with_retention(std::span<const Detection> dets,
                                        std::span<const double> scores, double tau) {
  if (dets.size() != scores.size()) {
    throw std::invalid_argument("nms_with_retention: " + std::to_string(dets.size()) +
                                " detections but " + std::to_string(scores.size()) + " scores");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("nms_with_retention: non-finite score");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> rank_of(dets.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r;

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t idx : order) by_class[dets[idx].class_id].push_back(idx);

  std::vector<std::pair<std::size_t, Cluster>> ranked;
  for (const auto& [cls, group] : by_class) greedy_class_nms(dets, scores, group, tau, ranked, rank_of);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<Cluster> clusters;
  clusters.reserve(ranked.size());
  for (auto& [rank, cluster] : ranked) clusters.push_back(std::move(cluster));
  return clusters;
}

DecoupledCorners decouple(const Cluster& cluster) {
  DecoupledCorners out;
  out.tl.reserve(cluster.overlaps.size() + 1);
  out.br.reserve(cluster.overlaps.size() + 1);
  auto push = [&](const ClusterMember& m) {
    out.tl.push_back({m.detection.box.top_left(), m.source});
    out.br.push_back({m.detection.box.bottom_right(), m.source});
  };
  push(cluster.prediction);
  for (const ClusterMember& m : cluster.overlaps) push(m);
  return out;
}

std::vector<double> score_corners(std::span<const CornerCandidate> cands, const CornerHeatmap& hm,
                                  Corner which, std::size_t class_id) {
  std::vector<double> out;
  out.reserve(cands.size());
  for (const CornerCandidate& c : cands) out.push_back(lookup(hm, which, class_id, c.point));
  return out;
}

std::vector<std::size_t> select_corners(std::span<const double> scores,
                                        const CoupleStrategy& strategy) {
  if (scores.empty()) throw std::invalid_argument("select_corners: empty candidate list");
  std::vector<std::size_t> picked;
  switch (strategy.kind) {
    case CoupleStrategy::Kind::max:
      picked.push_back(argmax_first(scores));
      break;
    case CoupleStrategy::Kind::top_n: {
      if (strategy.n < 1) throw std::invalid_argument("select_corners: top-n requires n >= 1");
      std::vector<std::size_t> idx(scores.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      idx.resize(std::min(strategy.n, idx.size()));
      picked = std::move(idx);
      break;
    }
    case CoupleStrategy::Kind::all:
      picked.resize(scores.size());
      std::iota(picked.begin(), picked.end(), 0);
      break;
    case CoupleStrategy::Kind::threshold: {
      double theta = strategy.theta;
      if (strategy.adaptive) {
        const auto n = static_cast<double>(scores.size());
        const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
        double var = 0.0;
        for (double s : scores) var += (s - mean) * (s - mean);
        theta = mean + std::sqrt(var / n);
      }
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= theta) picked.push_back(i);
      }
      if (picked.empty()) picked.push_back(argmax_first(scores));
      break;
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

Point mean_point(std::span<const CornerCandidate> cands, std::span<const std::size_t> picked) {
  double sx = 0.0, sy = 0.0;
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (std::size_t i : picked) {
    const Point& p = cands[i].point;
    sx += p.x;
    sy += p.y;
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
  const auto k = static_cast<double>(picked.size());
  // Rounding in the sum must not push the mean outside the candidate range.
  return {std::clamp(sx / k, lo_x, hi_x), std::clamp(sy / k, lo_y, hi_y)};
}

}  // namespace

BBox couple(std::span<const CornerCandidate> tl_cands, std::span<const double> tl_scores,
            std::span<const CornerCandidate> br_cands, std::span<const double> br_scores,
            const CoupleStrategy& strategy) {
  if (tl_cands.empty() || br_cands.empty()) throw std::invalid_argument("couple: empty candidate list");
  if (tl_cands.size() != tl_scores.size() || br_cands.size() != br_scores.size()) {
    throw std::invalid_argument("couple: candidates and scores are not aligned");
  }
  const Point tl = mean_point(tl_cands, select_corners(tl_scores, strategy));
  const Point br = mean_point(br_cands, select_corners(br_scores, strategy));
  const BBox out{tl.x, tl.y, br.x, br.y};
  if (!out.valid()) {
    return {tl_cands[0].point.x, tl_cands[0].point.y, br_cands[0].point.x, br_cands[0].point.y};
  }
  return out;
}

std::vector<ScoredDetection> bdc_pipeline(std::span<const Detection> dets, const CornerHeatmap& hm,
                                          const BdcConfig& cfg) {
  cfg.validate();
  const std::vector<Detection> kept = ingest(dets, cfg, hm.channels());

  std::vector<double> rank(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const Detection& d = kept[i];
    if (cfg.rank_by == RankBy::cls) {
      rank[i] = d.score;
    } else {
      const double f_tl = lookup(hm, Corner::top_left, d.class_id, d.box.top_left());
      const double f_br = lookup(hm, Corner::bottom_right, d.class_id, d.box.bottom_right());
      rank[i] = cocl(d.score, f_tl, f_br, cfg.cocl_variant);
    }
  }

  const std::vector<Cluster> clusters = nms_with_retention(kept, rank, cfg.iou_tau);
  std::vector<ScoredDetection> out;
  out.reserve(std::min(clusters.size(), cfg.max_per_image));
  for (const Cluster& cluster : clusters) {
    if (out.size() == cfg.max_per_image) break;
    const std::size_t cls = cluster.prediction.detection.class_id;
    const DecoupledCorners corners = decouple(cluster);
    const auto tl_scores = score_corners(corners.tl, hm, Corner::top_left, cls);
    const auto br_scores = score_corners(corners.br, hm, Corner::bottom_right, cls);
    Detection updated = cluster.prediction.detection;
    updated.box = couple(corners.tl, tl_scores, corners.br, br_scores, cfg.strategy);
    out.push_back({updated, cluster.prediction.rank_score});
  }
  return out;
}

std::vector<ScoredDetection> plain_nms(std::span<const Detection> dets, const BdcConfig& cfg) {
  cfg.validate();
  const std::vector<Detection> kept = ingest(dets, cfg, std::nullopt);
  std::vector<double> rank(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) rank[i] = kept[i].score;
  const std::vector<Cluster> clusters = nms_with_retention(kept, rank, cfg.iou_tau);
  std::vector<ScoredDetection> out;
  out.reserve(std::min(clusters.size(), cfg.max_per_image));
  for (const Cluster& cluster : clusters) {
    if (out.size() == cfg.max_per_image) break;
    out.push_back({cluster.prediction.detection, cluster.prediction.rank_score});
  }
  return out;
}

}  // namespace bdc
