#include <benchmark/benchmark.h>

#include <random>

#include "splatstab/optimize.hpp"
#include "splatstab/synthetic.hpp"
#include "splatstab/trajectory.hpp"

using namespace splatstab;

namespace {

void BM_SmoothTrajectory(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.01);
  Trajectory t;
  for (int k = 0; k < state.range(0); ++k) {
    Pose p = Pose::from_translation(Eigen::Vector3d(0.01 * k + g(rng), g(rng), g(rng)));
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(g(rng), Eigen::Vector3d::UnitY()));
    t.push_back(p);
  }
  const SmoothingConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(smooth_trajectory(t, cfg));
  }
}
BENCHMARK(BM_SmoothTrajectory)->Arg(300)->Arg(3000);

// One five-step epoch of a single frame, including supervision setup.
void BM_OptimizeEpoch(benchmark::State& state) {
  SceneSpec spec = default_scene_spec(64, 48, 8, 6);
  spec.trajectory.jitter_rotation_deg = 0.3;
  const VideoBundle b = generate(spec);
  OptimConfig cfg;
  cfg.steps_per_epoch = 5;
  const std::vector<GaussianScene> scenes = build_scenes(b, cfg.init);
  for (auto _ : state) {
    FrameOptimizer opt(4, b, scenes[4], cfg);
    opt.run_epoch(0, scenes);
    benchmark::DoNotOptimize(opt.scene());
  }
}
BENCHMARK(BM_OptimizeEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
