// Serial vs OpenMP timings for the three parallel kernels.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include "signmap/metric_model.hpp"
#include "signmap/pipeline.hpp"
#include "signmap/similarity.hpp"
#include "signmap/simulator.hpp"
#include "signmap/tracker.hpp"

namespace {

using namespace signmap;

Exec exec_arg(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

const std::vector<DetectionSegment>& detections() {
  static const std::vector<DetectionSegment> d = [] {
    const SimConfig cfg = benchmark_preset(1);
    const auto segs = generate_segments(cfg, 8);
    return degrade_segments(segs, cfg.noise, cfg.class_count, 1 ^ kDegradeSeedSalt);
  }();
  return d;
}

// Tracking one segment is dominated by cost-matrix construction.
void BM_TrackSegment(benchmark::State& state) {
  TrackerConfig cfg;
  cfg.exec = exec_arg(state);
  const DetectionSegment& seg = detections().front();
  for (auto _ : state) benchmark::DoNotOptimize(track_segment(seg, cfg));
}
BENCHMARK(BM_TrackSegment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Gradient(benchmark::State& state) {
  const SimConfig cfg = benchmark_preset(2);
  Rng rng(2);
  const ParametricNoise noise(2.0, 0.05, 2.0);
  const auto pairs =
      generate_training_pairs(generate_segments(cfg, 2), noise, cfg.class_count, rng).pairs;
  const auto examples = make_examples(pairs);
  const std::size_t n = std::min<std::size_t>(examples.size(), 128);
  const std::span<const TrainingExample> batch(examples.data(), n);
  const MetricModel m = make_metric_model(feature_layout::kTotal, kDefaultHiddenLayers,
                                          ClassEmbedding::seeded(cfg.class_count, 2), rng);
  MetricModel grad = zeros_like(m);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(m, batch, grad, exec_arg(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Gradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SegmentPipeline(benchmark::State& state) {
  PipelineConfig pc;
  pc.tracker.max_gap = 2;
  pc.min_support = 2;
  for (auto _ : state) benchmark::DoNotOptimize(run_segments(detections(), pc, exec_arg(state)));
}
BENCHMARK(BM_SegmentPipeline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
