#include "bdc/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "bdc/cli/errors.hpp"
#include "bdc/cli/heatmap_file.hpp"
#include "bdc/cli/records.hpp"
#include "json.hpp"

namespace bdc::cli {

namespace fs = std::filesystem;

std::size_t worker_count() {
  if (const char* env = std::getenv("BDC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(i) for i in [0, count) on up to worker_count() threads. The
// exception of the lowest failing index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min(worker_count(), count);
  std::vector<std::exception_ptr> errors(count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory '" + dir.string() + "'");
}

fs::path heatmap_path(const fs::path& dir, const std::string& image_id) { return dir / (image_id + ".chm"); }

}  // namespace

std::size_t cmd_encode(const EncodeOptions& opts) {
  if (opts.channels == 0 || opts.dims.height == 0 || opts.dims.width == 0) {
    throw UsageError("encode: classes, grid height and grid width must be positive");
  }
  if (!(opts.stride > 0.0)) throw UsageError("encode: stride must be positive");
  if (!(opts.gaussian.min_overlap > 0.0 && opts.gaussian.min_overlap < 1.0) ||
      !(opts.gaussian.sigma_divisor > 0.0)) {
    throw UsageError("encode: min-overlap must lie in (0,1) and sigma-divisor must be positive");
  }
  const auto rows = read_rows(opts.gt_path, RowKind::ground_truth);
  std::map<std::string, std::vector<ClassBox>> per_image;
  for (const std::string& id : opts.image_ids) {
    check_image_id(id, 0);
    per_image[id];
  }
  for (const auto& r : rows) {
    if (r.class_id >= opts.channels) {
      throw DataError(opts.gt_path.string() + ": line " + std::to_string(r.line) + ": class " +
                      std::to_string(r.class_id) + " >= classes " + std::to_string(opts.channels));
    }
    per_image[r.image_id].push_back({r.class_id, r.box});
  }
  ensure_dir(opts.out_dir);
  std::vector<const std::pair<const std::string, std::vector<ClassBox>>*> items;
  for (const auto& kv : per_image) items.push_back(&kv);
  parallel_for(items.size(), [&](std::size_t i) {
    const auto& [id, boxes] = *items[i];
    const CornerHeatmap hm = encode_corner_heatmaps(boxes, opts.channels, opts.dims, opts.stride, opts.gaussian);
    write_heatmap(heatmap_path(opts.out_dir, id), hm);
  });
  return items.size();
}

std::size_t cmd_postprocess(const PostprocessOptions& opts) {
  try {
    opts.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("postprocess: ") + e.what());
  }
  const auto rows = read_rows(opts.dets_path, RowKind::detection);
  std::map<std::string, std::vector<std::size_t>> per_image;
  for (std::size_t i = 0; i < rows.size(); ++i) per_image[rows[i].image_id].push_back(i);

  std::vector<std::pair<std::string, std::vector<std::size_t>>> images(per_image.begin(), per_image.end());
  std::vector<std::vector<DetectionRecord>> results(images.size());
  parallel_for(images.size(), [&](std::size_t k) {
    const auto& [id, idx] = images[k];
    std::vector<Detection> dets;
    dets.reserve(idx.size());
    for (std::size_t i : idx) dets.push_back({rows[i].class_id, rows[i].score, rows[i].box});

    std::vector<ScoredDetection> out;
    const fs::path hm_path = heatmap_path(opts.heatmap_dir, id);
    if (opts.plain_nms) {
      out = plain_nms(dets, opts.config);
    } else if (!fs::exists(hm_path)) {
      if (!opts.fallback_nms) {
        throw DataError("image '" + id + "': no heatmap file '" + hm_path.string() +
                        "' (use --fallback-nms to apply plain NMS)");
      }
      out = plain_nms(dets, opts.config);
    } else {
      const CornerHeatmap hm = read_heatmap(hm_path);
      for (std::size_t i : idx) {
        if (rows[i].class_id >= hm.channels()) {
          throw DataError(opts.dets_path.string() + ": line " + std::to_string(rows[i].line) + ": class " +
                          std::to_string(rows[i].class_id) + " >= heatmap channels " +
                          std::to_string(hm.channels()) + " for image '" + id + "'");
        }
      }
      out = bdc_pipeline(dets, hm, opts.config);
    }
    auto& recs = results[k];
    recs.reserve(out.size());
    for (const ScoredDetection& d : out) recs.push_back({id, d.detection.class_id, d.score, d.detection.box, 0});
  });

  std::ofstream file(opts.out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write '" + opts.out_path.string() + "'");
  std::size_t written = 0;
  for (const auto& recs : results) {
    for (const auto& r : recs) file << format_row(r) << '\n';
    written += recs.size();
  }
  if (!file) throw DataError("write failed for '" + opts.out_path.string() + "'");
  return written;
}

EvalReport cmd_eval(const EvalOptionsCli& opts) {
  if (opts.max_dets == 0) throw UsageError("eval: max-dets must be positive");
  const auto gts = to_ground_truth(read_rows(opts.gt_path, RowKind::ground_truth));
  const auto dets = to_eval_detections(read_rows(opts.dets_path, RowKind::ranked));
  const EvalReport rep = evaluate(gts, dets, {opts.max_dets});
  if (opts.json_out) {
    std::ofstream out(*opts.json_out, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + opts.json_out->string() + "'");
    out << format_report_json(rep) << '\n';
  }
  return rep;
}

std::string format_report_table(const EvalReport& rep) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "ap " << rep.ap << '\n'
     << "ap50 " << rep.ap50 << '\n'
     << "ap75 " << rep.ap75 << '\n'
     << "ap_s " << rep.ap_small << '\n'
     << "ap_m " << rep.ap_medium << '\n'
     << "ap_l " << rep.ap_large << '\n'
     << "mean_matched_iou " << rep.mean_matched_iou << '\n'
     << "n_images " << rep.n_images << '\n'
     << "n_dets " << rep.n_dets << '\n';
  return os.str();
}

std::string format_report_json(const EvalReport& rep) {
  nlohmann::ordered_json j;
  j["ap"] = rep.ap;
  j["ap50"] = rep.ap50;
  j["ap75"] = rep.ap75;
  j["ap_s"] = rep.ap_small;
  j["ap_m"] = rep.ap_medium;
  j["ap_l"] = rep.ap_large;
  j["mean_matched_iou"] = rep.mean_matched_iou;
  j["n_images"] = rep.n_images;
  j["n_dets"] = rep.n_dets;
  return j.dump();
}

void cmd_synth(const SynthOptions& opts) {
  if (opts.images == 0) throw UsageError("synth: images must be >= 1");
  try {
    opts.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path hm_dir = opts.out_dir / "heatmaps";
  ensure_dir(hm_dir);
  std::vector<SynthScene> scenes(opts.images);
  parallel_for(opts.images, [&](std::size_t i) {
    scenes[i] = synth_scene(opts.config, i);
    write_heatmap(heatmap_path(hm_dir, scenes[i].image_id), scenes[i].heatmap);
  });
  std::vector<DetectionRecord> gt_rows, det_rows;
  for (const SynthScene& s : scenes) {
    for (const GroundTruth& g : s.gts) gt_rows.push_back({s.image_id, g.class_id, 1.0, g.box, 0});
    for (const Detection& d : s.detections) det_rows.push_back({s.image_id, d.class_id, d.score, d.box, 0});
  }
  write_rows(opts.out_dir / "gt.jsonl", gt_rows, RowKind::ground_truth);
  write_rows(opts.out_dir / "dets.jsonl", det_rows, RowKind::detection);
}

SynthScene bench_scene(std::size_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.duplicates = 10;
  cfg.objects = std::max<std::size_t>(1, (n + cfg.duplicates - 1) / cfg.duplicates);
  cfg.classes = 2;
  cfg.stride = 8.0;
  cfg.jitter = 4.0;
  // About one object per 96x96 pixels, boxes 24..96 px on a side.
  const double side = 96.0 * std::sqrt(static_cast<double>(cfg.objects));
  cfg.image_width = cfg.image_height = side;
  cfg.min_box_fraction = 24.0 / side;
  cfg.max_box_fraction = std::min(1.0, 96.0 / side);
  SynthScene scene = synth_scene(cfg, 0);
  scene.detections.resize(std::min(n, scene.detections.size()));
  scene.detection_source.resize(scene.detections.size());
  return scene;
}

namespace {

template <typename Fn>
double best_time(Fn&& fn, const BenchOptions& opts) {
  using clock = std::chrono::steady_clock;
  double best = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t rep = 0; rep < opts.min_repeats || total < opts.min_seconds; ++rep) {
    const auto t0 = clock::now();
    fn();
    const double dt = std::chrono::duration<double>(clock::now() - t0).count();
    best = std::min(best, dt);
    total += dt;
  }
  return best;
}

std::pair<double, double> time_pair(std::size_t n, const BenchOptions& opts) {
  const SynthScene scene = bench_scene(n, opts.seed);
  std::size_t sink = 0;
  const double nms = best_time([&] { sink += plain_nms(scene.detections, opts.config).size(); }, opts);
  const double bdc = best_time([&] { sink += bdc_pipeline(scene.detections, scene.heatmap, opts.config).size(); }, opts);
  if (sink == static_cast<std::size_t>(-1)) std::abort();
  return {nms, bdc};
}

}  // namespace

BenchReport cmd_bench(const BenchOptions& opts) {
  if (opts.sizes.empty()) throw UsageError("bench: need at least one size");
  BenchReport rep;
  for (std::size_t n : opts.sizes) {
    if (n == 0) throw UsageError("bench: sizes must be positive");
    BenchRow row;
    row.n = n;
    std::tie(row.nms_seconds, row.bdc_seconds) = time_pair(n, opts);
    std::tie(row.nms_seconds_2n, row.bdc_seconds_2n) = time_pair(2 * n, opts);
    rep.rows.push_back(row);
  }
  return rep;
}

bool bench_within_ceiling(const BenchRow& row) {
  return row.nms_doubling() <= kDoublingCeiling && row.bdc_doubling() <= kDoublingCeiling;
}

std::string format_bench_report(const BenchReport& rep) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%10s %12s %12s %14s %14s %9s %9s %9s %s\n", "n", "nms_s", "bdc_s",
                "nms_boxes/s", "bdc_boxes/s", "bdc/nms", "nms_x2", "bdc_x2", "ceiling");
  os << line;
  for (const BenchRow& r : rep.rows) {
    std::snprintf(line, sizeof line, "%10zu %12.6f %12.6f %14.0f %14.0f %9.3f %9.3f %9.3f %s\n", r.n, r.nms_seconds,
                  r.bdc_seconds, r.nms_boxes_per_second(), r.bdc_boxes_per_second(), r.runtime_ratio(),
                  r.nms_doubling(), r.bdc_doubling(), bench_within_ceiling(r) ? "ok" : "EXCEEDED");
    os << line;
  }
  return os.str();
}

}  // namespace bdc::cli
