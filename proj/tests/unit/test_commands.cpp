#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bdc/cli/commands.hpp"
#include "bdc/cli/errors.hpp"
#include "bdc/cli/heatmap_file.hpp"
#include "bdc/cli/records.hpp"
#include "fixtures.hpp"
#include "reference.hpp"

namespace fs = std::filesystem;

namespace bdc::cli {
namespace {

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / ("bdc_test_" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<DetectionRecord> records_from(const std::vector<Detection>& dets, const std::string& image) {
  std::vector<DetectionRecord> rows;
  for (const auto& d : dets) rows.push_back({image, d.class_id, d.score, d.box, 0});
  return rows;
}

TEST(CmdEncode, EmptyGtGivesZeroHeatmaps) {
  TempDir dir;
  write_text(dir / "gt.jsonl", "");
  EncodeOptions opts{dir / "gt.jsonl", dir / "hm", 3, {8, 10}, 4.0, {}, {"a", "b"}};
  EXPECT_EQ(cmd_encode(opts), 2u);
  for (const char* id : {"a", "b"}) {
    const auto hm = read_heatmap(dir / "hm" / (std::string(id) + ".chm"));
    EXPECT_EQ(hm.channels(), 3u);
    EXPECT_EQ(hm.dims(), (GridDims{8, 10}));
    for (float v : hm.tl().values()) EXPECT_EQ(v, 0.0f);
    for (float v : hm.br().values()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(CmdEncode, PeakReadsBackAsOne) {
  TempDir dir;
  write_rows(dir / "gt.jsonl", {{"img", 1, 0.0, {40, 24, 200, 160}, 0}}, RowKind::ground_truth);
  EncodeOptions opts{dir / "gt.jsonl", dir / "hm", 2, {32, 32}, 8.0, {}, {}};
  EXPECT_EQ(cmd_encode(opts), 1u);
  const auto hm = read_heatmap(dir / "hm" / "img.chm");
  EXPECT_EQ(lookup(hm, Corner::top_left, 1, {40, 24}), 1.0);
  EXPECT_EQ(lookup(hm, Corner::bottom_right, 1, {200, 160}), 1.0);
  EXPECT_EQ(lookup(hm, Corner::top_left, 0, {40, 24}), 0.0);
  const auto first = slurp(dir / "hm" / "img.chm");
  cmd_encode(opts);
  EXPECT_EQ(slurp(dir / "hm" / "img.chm"), first);
}

TEST(CmdEncode, BadRowNamesLine) {
  TempDir dir;
  write_text(dir / "gt.jsonl", "{\"image_id\":\"a\",\"class\":0,\"bbox\":[0,0,5,5]}\n{\"image_id\":\"a\"}\n");
  EncodeOptions opts{dir / "gt.jsonl", dir / "hm", 1, {8, 8}, 4.0, {}, {}};
  try {
    cmd_encode(opts);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  write_text(dir / "gt.jsonl", "{\"image_id\":\"a\",\"class\":4,\"bbox\":[0,0,5,5]}\n");
  EXPECT_THROW(cmd_encode(opts), DataError);
}

TEST(CmdPostprocess, EmptyInputGivesEmptyOutput) {
  TempDir dir;
  write_text(dir / "dets.jsonl", "");
  fs::create_directories(dir / "hm");
  PostprocessOptions opts{dir / "dets.jsonl", dir / "hm", dir / "out.jsonl", {}, false, false};
  EXPECT_EQ(cmd_postprocess(opts), 0u);
  EXPECT_TRUE(fs::exists(dir / "out.jsonl"));
  EXPECT_EQ(slurp(dir / "out.jsonl"), "");
}

TEST(CmdPostprocess, SelfPeakedFixtureReproducesPlainNms) {
  TempDir dir;
  fixtures::Rng rng(77);
  std::vector<DetectionRecord> rows;
  for (const char* image : {"a", "b", "c"}) {
    auto part = records_from(fixtures::random_detections(rng, 80, 3, 256.0), image);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::shuffle(rows.begin(), rows.end(), rng);
  write_rows(dir / "dets.jsonl", rows);

  BdcConfig cfg;
  cfg.strategy = CoupleStrategy::max();
  cfg.rank_by = RankBy::cls;
  PostprocessOptions nms{dir / "dets.jsonl", dir / "none", dir / "nms.jsonl", cfg, false, true};
  const std::size_t kept = cmd_postprocess(nms);
  ASSERT_GT(kept, 0u);

  EncodeOptions enc{dir / "nms.jsonl", dir / "hm", 3, {32, 32}, 8.0, {}, {}};
  EXPECT_EQ(cmd_encode(enc), 3u);
  PostprocessOptions bdc{dir / "dets.jsonl", dir / "hm", dir / "bdc.jsonl", cfg, false, false};
  EXPECT_EQ(cmd_postprocess(bdc), kept);

  auto strip = [](const fs::path& p) {
    std::vector<std::string> out;
    for (auto& r : read_rows(p, RowKind::ranked)) {
      r.score = 0.0;
      out.push_back(format_row(r));
    }
    return out;
  };
  EXPECT_EQ(strip(dir / "bdc.jsonl"), strip(dir / "nms.jsonl"));
}

TEST(CmdPostprocess, UnknownClassNamesRow) {
  TempDir dir;
  write_text(dir / "dets.jsonl",
             "{\"image_id\":\"a\",\"class\":0,\"score\":0.5,\"bbox\":[0,0,5,5]}\n"
             "{\"image_id\":\"a\",\"class\":9,\"score\":0.5,\"bbox\":[0,0,5,5]}\n");
  fs::create_directories(dir / "hm");
  write_heatmap(dir / "hm" / "a.chm", CornerHeatmap::zeros(2, 4, 4, 8.0));
  PostprocessOptions opts{dir / "dets.jsonl", dir / "hm", dir / "out.jsonl", {}, false, false};
  try {
    cmd_postprocess(opts);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(CmdPostprocess, MissingHeatmap) {
  TempDir dir;
  write_text(dir / "dets.jsonl", "{\"image_id\":\"a\",\"class\":0,\"score\":0.5,\"bbox\":[0,0,5,5]}\n");
  fs::create_directories(dir / "hm");
  PostprocessOptions opts{dir / "dets.jsonl", dir / "hm", dir / "out.jsonl", {}, false, false};
  EXPECT_THROW(cmd_postprocess(opts), DataError);
  opts.fallback_nms = true;
  EXPECT_EQ(cmd_postprocess(opts), 1u);
  const auto out = read_rows(dir / "out.jsonl", RowKind::ranked);
  EXPECT_EQ(out[0].score, 0.5);
}

TEST(CmdEval, PerfectAndReversedScores) {
  TempDir dir;
  fixtures::Rng rng(5);
  std::vector<DetectionRecord> gts;
  for (int i = 0; i < 12; ++i) gts.push_back({"im" + std::to_string(i % 3), fixtures::below(rng, 2), 0.0,
                                             fixtures::random_box(rng, 400.0, 20.0, 150.0), 0});
  write_rows(dir / "gt.jsonl", gts, RowKind::ground_truth);
  auto dets = gts;
  for (auto& d : dets) d.score = fixtures::uniform(rng, 0, 1);
  write_rows(dir / "dets.jsonl", dets);
  const auto perfect = cmd_eval({dir / "gt.jsonl", dir / "dets.jsonl", dir / "rep.json", 100});
  EXPECT_EQ(perfect.ap, 1.0);
  const auto json = nlohmann::json::parse(slurp(dir / "rep.json"));
  EXPECT_EQ(json.at("ap").get<double>(), 1.0);
  EXPECT_EQ(json.at("n_dets").get<std::size_t>(), 12u);
  for (const char* key : {"ap50", "ap75", "ap_s", "ap_m", "ap_l", "mean_matched_iou", "n_images"})
    EXPECT_TRUE(json.contains(key)) << key;

  // Noisy detections with reversed scores: compare with the reference evaluator.
  const auto fx = fixtures::random_eval_fixture(rng, 10);
  std::vector<DetectionRecord> g2, d2;
  for (const auto& g : fx.gts) g2.push_back({g.image_id, g.class_id, 0.0, g.box, 0});
  for (const auto& d : fx.dets) d2.push_back({d.image_id, d.class_id, 1.0 - d.score, d.box, 0});
  write_rows(dir / "gt2.jsonl", g2, RowKind::ground_truth);
  write_rows(dir / "dets2.jsonl", d2);
  std::vector<EvalDetection> reversed = fx.dets;
  for (auto& d : reversed) d.score = 1.0 - d.score;
  const auto got = cmd_eval({dir / "gt2.jsonl", dir / "dets2.jsonl", std::nullopt, 100});
  EXPECT_NEAR(got.ap, ref::evaluate(fx.gts, reversed).ap, 1e-12);
}

TEST(CmdEval, MissingGtFile) {
  TempDir dir;
  write_text(dir / "dets.jsonl", "");
  EXPECT_THROW(cmd_eval({dir / "nope.jsonl", dir / "dets.jsonl", std::nullopt, 100}), DataError);
}

TEST(CmdEval, EmptyDetections) {
  TempDir dir;
  write_rows(dir / "gt.jsonl", {{"a", 0, 0.0, {0, 0, 50, 50}, 0}}, RowKind::ground_truth);
  write_text(dir / "dets.jsonl", "");
  EXPECT_EQ(cmd_eval({dir / "gt.jsonl", dir / "dets.jsonl", std::nullopt, 100}).ap, 0.0);
}

TEST(CmdSynth, WritesFilesAndMatchesScenes) {
  TempDir dir;
  SynthOptions opts;
  opts.images = 4;
  opts.out_dir = dir / "s";
  cmd_synth(opts);
  std::size_t chm = 0;
  for (const auto& e : fs::directory_iterator(dir / "s" / "heatmaps")) chm += e.path().extension() == ".chm";
  EXPECT_EQ(chm, 4u);

  const auto gts = read_rows(dir / "s" / "gt.jsonl", RowKind::ground_truth);
  const auto dets = read_rows(dir / "s" / "dets.jsonl", RowKind::detection);
  EXPECT_EQ(gts.size(), 4 * opts.config.objects);
  EXPECT_EQ(dets.size(), 4 * opts.config.objects * opts.config.duplicates);
  // Recompute the score model from the emitted files alone.
  const auto scene = synth_scene(opts.config, 2);
  std::size_t checked = 0;
  for (const auto& d : dets) {
    if (d.image_id != scene.image_id) continue;
    const auto& src = scene.gts[scene.detection_source[checked]];
    EXPECT_EQ(d.box, scene.detections[checked].box);
    const double floor = opts.config.score_iou_weight * iou(d.box, src.box);
    EXPECT_GE(d.score, std::min(1.0, floor) - 1e-12);
    EXPECT_LE(d.score, floor + (1.0 - opts.config.score_iou_weight) + 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, scene.detections.size());
  const auto hm = read_heatmap(dir / "s" / "heatmaps" / (scene.image_id + ".chm"));
  EXPECT_EQ(encode_heatmap(hm), encode_heatmap(scene.heatmap));
}

TEST(CmdSynth, IdempotentAndThreadCountIndependent) {
  TempDir dir;
  SynthOptions opts;
  opts.images = 6;
  opts.config.heatmap_noise = 0.05;
  opts.out_dir = dir / "a";
  ASSERT_EQ(setenv("BDC_THREADS", "1", 1), 0);
  EXPECT_EQ(worker_count(), 1u);
  cmd_synth(opts);
  PostprocessOptions pp{dir / "a" / "dets.jsonl", dir / "a" / "heatmaps", dir / "a" / "out.jsonl", {}, false, false};
  cmd_postprocess(pp);

  ASSERT_EQ(setenv("BDC_THREADS", "4", 1), 0);
  EXPECT_EQ(worker_count(), 4u);
  opts.out_dir = dir / "b";
  cmd_synth(opts);
  pp = {dir / "b" / "dets.jsonl", dir / "b" / "heatmaps", dir / "b" / "out.jsonl", {}, false, false};
  cmd_postprocess(pp);
  cmd_postprocess(pp);
  unsetenv("BDC_THREADS");

  for (const char* f : {"gt.jsonl", "dets.jsonl", "out.jsonl", "heatmaps/img000005.chm"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST(CmdBench, TinyAndRatio) {
  BenchOptions tiny;
  tiny.sizes = {1};
  tiny.min_seconds = 0.0;
  tiny.min_repeats = 1;
  const auto r1 = cmd_bench(tiny);
  ASSERT_EQ(r1.rows.size(), 1u);
  EXPECT_EQ(r1.rows[0].n, 1u);
  EXPECT_EQ(bench_scene(1, 7).detections.size(), 1u);
  EXPECT_EQ(bench_scene(1234, 7).detections.size(), 1234u);

  BenchOptions mid;
  mid.sizes = {10000};
  mid.min_seconds = 0.05;
  const auto r = cmd_bench(mid).rows.at(0);
  EXPECT_GE(r.runtime_ratio(), 1.0);
  EXPECT_NE(format_bench_report(cmd_bench(tiny)).find("bdc/nms"), std::string::npos);
}

int run_tool(const std::string& args, std::string* err) {
  TempDir dir;
  const std::string cmd = std::string(BDC_TOOL_PATH) + " " + args + " >/dev/null 2>" + (dir / "err").string();
  const int status = std::system(cmd.c_str());
  *err = slurp(dir / "err");
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, ExitCodesAndErrorPrefix) {
  TempDir dir;
  std::string err;
  EXPECT_EQ(run_tool("--help", &err), kExitOk);
  EXPECT_EQ(run_tool("frobnicate", &err), kExitUsage);
  EXPECT_EQ(err.rfind(kErrorPrefix, 0), 0u) << err;
  EXPECT_EQ(run_tool("postprocess --dets x --heatmaps y --out z --couple median", &err), kExitUsage);
  EXPECT_EQ(err.rfind(kErrorPrefix, 0), 0u) << err;
  EXPECT_EQ(run_tool("eval --gt /nonexistent/gt.jsonl --dets /nonexistent/d.jsonl", &err), kExitData);
  EXPECT_EQ(err.rfind(kErrorPrefix, 0), 0u) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);

  write_text(dir / "bad.jsonl", "{\"image_id\":\"a\",\"class\":0,\"score\":3,\"bbox\":[0,0,5,5]}\n");
  EXPECT_EQ(run_tool("postprocess --dets " + (dir / "bad.jsonl").string() + " --heatmaps " + dir.path().string() +
                         " --out " + (dir / "o.jsonl").string(),
                     &err),
            kExitData);
  EXPECT_NE(err.find("line 1"), std::string::npos) << err;

  EXPECT_EQ(run_tool("synth --out " + (dir / "s").string() + " --images 2", &err), kExitOk) << err;
  EXPECT_EQ(run_tool("postprocess --dets " + (dir / "s" / "dets.jsonl").string() + " --heatmaps " +
                         (dir / "s" / "heatmaps").string() + " --out " + (dir / "o.jsonl").string(),
                     &err),
            kExitOk)
      << err;
  EXPECT_EQ(run_tool("eval --gt " + (dir / "s" / "gt.jsonl").string() + " --dets " + (dir / "o.jsonl").string() +
                         " --json " + (dir / "r.json").string(),
                     &err),
            kExitOk)
      << err;
  EXPECT_GT(nlohmann::json::parse(slurp(dir / "r.json")).at("ap").get<double>(), 0.5);
}

}  // namespace
}  // namespace bdc::cli
