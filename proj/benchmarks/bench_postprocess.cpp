#include <benchmark/benchmark.h>

#include <random>

#include "bdc/cli/commands.hpp"
#include "bdc/evaluation.hpp"
#include "bdc/heatmap.hpp"
#include "bdc/postprocess.hpp"
#include "bdc/synth.hpp"

namespace {

void BM_PlainNms(benchmark::State& state) {
  const auto scene = bdc::cli::bench_scene(static_cast<std::size_t>(state.range(0)), 7);
  const bdc::BdcConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(bdc::plain_nms(scene.detections, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PlainNms)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMillisecond);

void BM_Bdc(benchmark::State& state) {
  const auto scene = bdc::cli::bench_scene(static_cast<std::size_t>(state.range(0)), 7);
  const bdc::BdcConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(bdc::bdc_pipeline(scene.detections, scene.heatmap, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bdc)->RangeMultiplier(10)->Range(100, 100000)->Unit(benchmark::kMillisecond);

void BM_CornerPool(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  bdc::Plane plane(side, side);
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : plane.values) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(bdc::corner_pool(plane, bdc::PoolDirection::top));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_CornerPool)->Arg(64)->Arg(128)->Arg(256);

void BM_Evaluate(benchmark::State& state) {
  bdc::SynthConfig cfg;
  const auto scenes = bdc::synth_scenes(cfg, static_cast<std::size_t>(state.range(0)));
  std::vector<bdc::GroundTruth> gts;
  std::vector<bdc::EvalDetection> dets;
  for (const auto& s : scenes) {
    gts.insert(gts.end(), s.gts.begin(), s.gts.end());
    for (const auto& d : s.detections) dets.push_back({s.image_id, d.class_id, d.score, d.box});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bdc::evaluate(gts, dets));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dets.size()));
}
BENCHMARK(BM_Evaluate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
