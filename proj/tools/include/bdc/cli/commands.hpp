#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bdc/evaluation.hpp"
#include "bdc/heatmap.hpp"
#include "bdc/postprocess.hpp"
#include "bdc/synth.hpp"

namespace bdc::cli {

/// Worker count: BDC_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();

struct EncodeOptions {
  std::filesystem::path gt_path;
  std::filesystem::path out_dir;
  std::size_t channels = 1;
  GridDims dims;
  double stride = 8.0;
  GaussianConfig gaussian;
  /// Emitted even when they have no ground truth (zero-filled heatmaps).
  std::vector<std::string> image_ids;
};

/// Writes <out_dir>/<image_id>.chm per image; returns the number of files.
std::size_t cmd_encode(const EncodeOptions& opts);

struct PostprocessOptions {
  std::filesystem::path dets_path;
  std::filesystem::path heatmap_dir;
  std::filesystem::path out_path;
  BdcConfig config;
  /// Images without a heatmap file get plain NMS instead of an error.
  bool fallback_nms = false;
  /// Skip coupling entirely and emit plain NMS for every image.
  bool plain_nms = false;
};

/// Returns the number of detections written.
std::size_t cmd_postprocess(const PostprocessOptions& opts);

struct EvalOptionsCli {
  std::filesystem::path gt_path;
  std::filesystem::path dets_path;
  std::optional<std::filesystem::path> json_out;
  std::size_t max_dets = 100;
};

EvalReport cmd_eval(const EvalOptionsCli& opts);

/// Flat "key value" lines.
std::string format_report_table(const EvalReport& rep);
/// {ap, ap50, ap75, ap_s, ap_m, ap_l, mean_matched_iou, n_images, n_dets}
std::string format_report_json(const EvalReport& rep);

struct SynthOptions {
  SynthConfig config;
  std::size_t images = 1;
  std::filesystem::path out_dir;
};

/// Writes gt.jsonl, dets.jsonl and heatmaps/<image_id>.chm under out_dir.
void cmd_synth(const SynthOptions& opts);

struct BenchOptions {
  std::vector<std::size_t> sizes = {1000, 10000, 100000};
  std::uint64_t seed = 7;
  /// Minimum wall time spent per measurement; the best run is reported.
  double min_seconds = 0.2;
  std::size_t min_repeats = 3;
  BdcConfig config;
};

struct BenchRow {
  std::size_t n = 0;
  double nms_seconds = 0.0;
  double bdc_seconds = 0.0;
  double nms_seconds_2n = 0.0;
  double bdc_seconds_2n = 0.0;

  double nms_boxes_per_second() const { return static_cast<double>(n) / nms_seconds; }
  double bdc_boxes_per_second() const { return static_cast<double>(n) / bdc_seconds; }
  double runtime_ratio() const { return bdc_seconds / nms_seconds; }
  double nms_doubling() const { return nms_seconds_2n / nms_seconds; }
  double bdc_doubling() const { return bdc_seconds_2n / bdc_seconds; }
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

/// Quadratic ceiling on t(2n)/t(n), with 25% slack.
inline constexpr double kDoublingCeiling = 4.0 * 1.25;

/// One image holding exactly n detections with a matching heatmap.
SynthScene bench_scene(std::size_t n, std::uint64_t seed);

BenchReport cmd_bench(const BenchOptions& opts);
std::string format_bench_report(const BenchReport& rep);
bool bench_within_ceiling(const BenchRow& row);

}  // namespace bdc::cli
