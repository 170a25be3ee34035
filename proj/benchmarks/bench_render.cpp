#include <benchmark/benchmark.h>

#include "splatstab/gsplat.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;

namespace {

VideoBundle bundle_for(int width) { return generate(default_scene_spec(width, width * 3 / 4, 2, 1)); }

void BM_RenderForward(benchmark::State& state) {
  const VideoBundle b = bundle_for(static_cast<int>(state.range(0)));
  const GaussianScene scene = build_scene(b.frames[0], b.depths[0], b.intrinsics, b.poses[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render(scene, b.intrinsics, b.poses[1]));
  }
  state.SetItemsProcessed(state.iterations() * b.intrinsics.width * b.intrinsics.height);
}
BENCHMARK(BM_RenderForward)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
  const VideoBundle b = bundle_for(static_cast<int>(state.range(0)));
  const GaussianScene scene = build_scene(b.frames[0], b.depths[0], b.intrinsics, b.poses[0]);
  RenderState rs;
  const RenderOutput out = render(scene, b.intrinsics, b.poses[1], {}, &rs);
  const Image upstream(out.color.width(), out.color.height(), 3, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_backward(scene, rs, {&upstream, nullptr, nullptr}));
  }
}
BENCHMARK(BM_RenderBackward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RenderTileSize(benchmark::State& state) {
  const VideoBundle b = bundle_for(128);
  const GaussianScene scene = build_scene(b.frames[0], b.depths[0], b.intrinsics, b.poses[0]);
  RenderSettings s;
  s.tile_size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render(scene, b.intrinsics, b.poses[1], s));
  }
}
BENCHMARK(BM_RenderTileSize)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
