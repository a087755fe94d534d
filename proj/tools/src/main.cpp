#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bdc/cli/commands.hpp"
#include "bdc/cli/errors.hpp"

namespace {

using namespace bdc;
using namespace bdc::cli;

struct BdcFlags {
  std::string cocl = "exp-avg";
  std::string couple = "top-n";
  std::string rank_by = "cocl";
  BdcConfig cfg;

  void add_to(CLI::App& app) {
    app.add_option("--iou-thr", cfg.iou_tau, "NMS / overlap IoU threshold")->capture_default_str();
    app.add_option("--cocl", cocl, "exp-avg | exp-max | exp-min | weighted:ALPHA")->capture_default_str();
    app.add_option("--couple", couple, "max | top-n | all | threshold")->capture_default_str();
    app.add_option("--topn", cfg.strategy.n, "n for --couple top-n")->capture_default_str();
    app.add_option("--theta", cfg.strategy.theta, "fixed threshold for --couple threshold")->capture_default_str();
    app.add_flag("--adaptive", cfg.strategy.adaptive, "threshold = mean + std of the candidate scores");
    app.add_option("--score-floor", cfg.score_floor, "drop detections below this score")->capture_default_str();
    app.add_option("--max-per-image", cfg.max_per_image, "cap on emitted detections")->capture_default_str();
    app.add_option("--rank-by", rank_by, "cocl | cls")->capture_default_str();
  }

  BdcConfig resolve() const {
    BdcConfig out = cfg;
    try {
      out.cocl_variant = CoclVariant::parse(cocl);
      out.strategy.kind = CoupleStrategy::parse_kind(couple);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (rank_by == "cocl") {
      out.rank_by = RankBy::cocl;
    } else if (rank_by == "cls") {
      out.rank_by = RankBy::cls;
    } else {
      throw UsageError("unknown --rank-by '" + rank_by + "' (expected cocl or cls)");
    }
    try {
      out.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return out;
  }
};

int fail(int code, const std::string& msg) {
  std::string line = msg;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << kErrorPrefix << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corner-aware detection post-processing: box decouple-couple, evaluation and benchmarks"};
  app.require_subcommand(1);

  // encode
  EncodeOptions enc;
  auto* encode = app.add_subcommand("encode", "Encode ground truth into corner heatmaps (<image_id>.chm)");
  encode->add_option("--gt", enc.gt_path, "ground-truth JSON-lines file")->required();
  encode->add_option("--out", enc.out_dir, "output directory")->required();
  encode->add_option("--classes", enc.channels, "number of classes C")->required();
  encode->add_option("--grid-height", enc.dims.height, "grid rows H")->required();
  encode->add_option("--grid-width", enc.dims.width, "grid columns W")->required();
  encode->add_option("--stride", enc.stride, "image pixels per grid cell")->capture_default_str();
  encode->add_option("--min-overlap", enc.gaussian.min_overlap, "Gaussian radius IoU rule")->capture_default_str();
  encode->add_option("--sigma-divisor", enc.gaussian.sigma_divisor, "sigma = (2r+1)/divisor")->capture_default_str();
  encode->add_option("--image-id", enc.image_ids, "also emit this image id (repeatable)");

  // postprocess
  PostprocessOptions post;
  BdcFlags post_flags;
  auto* postprocess = app.add_subcommand("postprocess", "Apply box decouple-couple per image");
  postprocess->add_option("--dets", post.dets_path, "detections JSON-lines file")->required();
  postprocess->add_option("--heatmaps", post.heatmap_dir, "directory of <image_id>.chm files");
  postprocess->add_option("--out", post.out_path, "output detections file")->required();
  postprocess->add_flag("--fallback-nms", post.fallback_nms, "plain NMS for images without a heatmap");
  postprocess->add_flag("--plain-nms", post.plain_nms, "plain NMS for every image (baseline)");
  post_flags.add_to(*postprocess);

  // eval
  EvalOptionsCli ev;
  std::string ev_json;
  auto* eval = app.add_subcommand("eval", "COCO-style AP of detections against ground truth");
  eval->add_option("--gt", ev.gt_path, "ground-truth JSON-lines file")->required();
  eval->add_option("--dets", ev.dets_path, "detections JSON-lines file")->required();
  eval->add_option("--json", ev_json, "also write the report as JSON here");
  eval->add_option("--max-dets", ev.max_dets, "detections per image and class")->capture_default_str();

  // synth
  SynthOptions syn;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic benchmark");
  synth->add_option("--out", syn.out_dir, "output directory")->required();
  synth->add_option("--images", syn.images, "number of images")->capture_default_str();
  synth->add_option("--seed", syn.config.seed, "RNG seed")->capture_default_str();
  synth->add_option("--image-width", syn.config.image_width, "image width (px)")->capture_default_str();
  synth->add_option("--image-height", syn.config.image_height, "image height (px)")->capture_default_str();
  synth->add_option("--objects", syn.config.objects, "objects per image")->capture_default_str();
  synth->add_option("--classes", syn.config.classes, "number of classes")->capture_default_str();
  synth->add_option("--jitter", syn.config.jitter, "corner jitter sigma (px)")->capture_default_str();
  synth->add_option("--score-iou-weight", syn.config.score_iou_weight, "score/IoU correlation weight")
      ->capture_default_str();
  synth->add_option("--duplicates", syn.config.duplicates, "detections per object")->capture_default_str();
  synth->add_option("--heatmap-noise", syn.config.heatmap_noise, "heatmap noise sigma")->capture_default_str();
  synth->add_option("--stride", syn.config.stride, "heatmap stride (px)")->capture_default_str();

  // bench
  BenchOptions bench_opts;
  BdcFlags bench_flags;
  bool strict = false;
  bool bench_json = false;
  auto* bench = app.add_subcommand("bench", "Time plain NMS against box decouple-couple");
  bench->add_option("--sizes", bench_opts.sizes, "detection counts per image")->delimiter(',')->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "scene seed")->capture_default_str();
  bench->add_option("--min-seconds", bench_opts.min_seconds, "minimum time per measurement")->capture_default_str();
  bench->add_flag("--strict", strict, "exit 2 if a doubling exceeds the quadratic ceiling");
  bench->add_flag("--json", bench_json, "print rows as JSON lines");
  bench_flags.add_to(*bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitUsage, e.what());
  }

  try {
    if (*encode) {
      const std::size_t n = cmd_encode(enc);
      std::cout << "wrote " << n << " heatmap file(s) to " << enc.out_dir.string() << '\n';
    } else if (*postprocess) {
      post.config = post_flags.resolve();
      if (!post.plain_nms && post.heatmap_dir.empty()) throw UsageError("postprocess: --heatmaps is required");
      const std::size_t n = cmd_postprocess(post);
      std::cout << "wrote " << n << " detection(s) to " << post.out_path.string() << '\n';
    } else if (*eval) {
      if (!ev_json.empty()) ev.json_out = ev_json;
      std::cout << format_report_table(cmd_eval(ev));
    } else if (*synth) {
      cmd_synth(syn);
      std::cout << "wrote " << syn.images << " image(s) to " << syn.out_dir.string() << '\n';
    } else if (*bench) {
      bench_opts.config = bench_flags.resolve();
      const BenchReport rep = cmd_bench(bench_opts);
      if (bench_json) {
        for (const BenchRow& r : rep.rows) {
          std::printf(
              "{\"n\":%zu,\"nms_seconds\":%.9g,\"bdc_seconds\":%.9g,\"nms_boxes_per_second\":%.6g,"
              "\"bdc_boxes_per_second\":%.6g,\"bdc_nms_ratio\":%.6g,\"nms_doubling\":%.6g,\"bdc_doubling\":%.6g}\n",
              r.n, r.nms_seconds, r.bdc_seconds, r.nms_boxes_per_second(), r.bdc_boxes_per_second(),
              r.runtime_ratio(), r.nms_doubling(), r.bdc_doubling());
        }
      } else {
        std::cout << format_bench_report(rep);
      }
      if (strict) {
        for (const BenchRow& r : rep.rows) {
          if (!bench_within_ceiling(r)) {
            return fail(kExitData, "bench: doubling n=" + std::to_string(r.n) + " exceeded the quadratic ceiling");
          }
        }
      }
    }
  } catch (const UsageError& e) {
    return fail(kExitUsage, e.what());
  } catch (const std::exception& e) {
    return fail(kExitData, e.what());
  }
  return kExitOk;
}
