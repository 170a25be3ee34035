#include <benchmark/benchmark.h>

#include "splatstab/flow.hpp"
#include "splatstab/ssim.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;

namespace {

void BM_Ssim(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const VideoBundle b = generate(default_scene_spec(w, w * 3 / 4, 2, 2));
  const bool grad = state.range(1) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ssim(b.frames[0], b.frames[1], nullptr, grad));
  }
}
BENCHMARK(BM_Ssim)->Args({128, 0})->Args({128, 1})->Args({512, 0})->Args({512, 1})->Unit(benchmark::kMillisecond);

void BM_ForwardSplat(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const VideoBundle b = generate(default_scene_spec(w, w * 3 / 4, 3, 3));
  const FlowField cam = camera_flow(b.depths[2], b.poses[2], b.poses[0], b.intrinsics);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_splat_flow(cam));
  }
}
BENCHMARK(BM_ForwardSplat)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SupervisionView(benchmark::State& state) {
  const VideoBundle b = generate(dynamic_scene_spec(128, 96, 3, 4));
  const CompensationConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(supervision_view(b.frames[0], b.flows.at({0, 2}), &b.flows.at({2, 0}), b.depths[2],
                                              b.poses[2], b.poses[0], b.intrinsics, cfg));
  }
}
BENCHMARK(BM_SupervisionView)->Unit(benchmark::kMillisecond);

}  // namespace
