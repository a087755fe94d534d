#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdc/geometry.hpp"
#include "bdc/heatmap.hpp"
#include "bdc/scoring.hpp"

namespace bdc {

/// Anchor-head output: class, classification score in [0, 1], box.
struct Detection {
  std::size_t class_id = 0;
  double score = 0.0;
  BBox box;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ClusterMember {
  Detection detection;
  double rank_score = 0.0;
  /// Index of the detection in the sequence handed to NMS.
  std::size_t source = 0;
};

/// A kept prediction and the same-class boxes it suppressed, in descending
/// rank order.
struct Cluster {
  ClusterMember prediction;
  std::vector<ClusterMember> overlaps;
};

struct CoupleStrategy {
  enum class Kind { max, top_n, all, threshold };

  Kind kind = Kind::top_n;
  std::size_t n = 10;
  double theta = 0.5;
  /// threshold only: use mean + std of the candidate scores instead of theta.
  bool adaptive = false;

  static CoupleStrategy max() { return {Kind::max}; }
  static CoupleStrategy top_n(std::size_t n) { return {Kind::top_n, n}; }
  static CoupleStrategy all() { return {Kind::all}; }
  static CoupleStrategy threshold(double theta, bool adaptive = false) {
    return {Kind::threshold, 10, theta, adaptive};
  }

  /// Parses max | top-n | all | threshold; n/theta/adaptive keep defaults.
  static Kind parse_kind(std::string_view text);
  std::string to_string() const;
};

/// Which score orders boxes for suppression.
enum class RankBy { cocl, cls };

struct BdcConfig {
  double iou_tau = 0.5;
  CoclVariant cocl_variant = CoclVariant::exp_avg();
  CoupleStrategy strategy;
  double score_floor = 0.05;
  std::size_t max_per_image = 100;
  RankBy rank_by = RankBy::cocl;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct ScoredDetection {
  /// Classification score is kept; the box may be updated by coupling.
  Detection detection;
  /// Score used for ranking (CoCl or classification score).
  double score = 0.0;

  friend bool operator==(const ScoredDetection&, const ScoredDetection&) = default;
};

/// Greedy per-class NMS on `scores`; suppressed boxes are retained in the
/// cluster of the box that suppressed them. Every input lands in exactly one
/// cluster. Clusters come out in descending prediction score, ties broken by
/// input index.
std::vector<Cluster> nms_with_retention(std::span<const Detection> dets,
                                        std::span<const double> scores, double tau);

struct CornerCandidate {
  Point point;
  std::size_t source = 0;

  friend bool operator==(const CornerCandidate&, const CornerCandidate&) = default;
};

struct DecoupledCorners {
  std::vector<CornerCandidate> tl;
  std::vector<CornerCandidate> br;
};

/// Splits a cluster into corner candidate lists; entry 0 is the prediction.
DecoupledCorners decouple(const Cluster& cluster);

std::vector<double> score_corners(std::span<const CornerCandidate> cands, const CornerHeatmap& hm,
                                  Corner which, std::size_t class_id);

/// Candidate indices chosen by the strategy, ascending. Never empty for a
/// non-empty score list; ties favour the lower index.
std::vector<std::size_t> select_corners(std::span<const double> scores,
                                        const CoupleStrategy& strategy);

/// Averages the selected corners of each side into a new box. Falls back to
/// the prediction box (candidate 0 on both sides) if the result is inverted.
BBox couple(std::span<const CornerCandidate> tl_cands, std::span<const double> tl_scores,
            std::span<const CornerCandidate> br_cands, std::span<const double> br_scores,
            const CoupleStrategy& strategy);

/// Box decouple-couple post-processing of one image's detections.
std::vector<ScoredDetection> bdc_pipeline(std::span<const Detection> dets, const CornerHeatmap& hm,
                                          const BdcConfig& cfg);

/// Baseline: score floor, greedy NMS on classification score, cap.
std::vector<ScoredDetection> plain_nms(std::span<const Detection> dets, const BdcConfig& cfg);

}  // namespace bdc
