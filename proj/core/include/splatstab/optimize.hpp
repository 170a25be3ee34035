#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "splatstab/bundle.hpp"
#include "splatstab/flow.hpp"
#include "splatstab/gsplat.hpp"
#include "splatstab/losses.hpp"

namespace splatstab {

enum class OptimizerKind {
  kAdam,
  kGradientDescent,
};

struct LearningRates {
  double offset = 1e-3;  // multiplied by the primitive's anchor depth
  double scale = 1e-2;
  double rot = 1e-2;
  double alpha = 5e-2;
  double color = 1e-2;
};

struct OptimConfig {
  int epochs = 3;
  int steps_per_epoch = 30;
  int views_per_step = 4;  // S
  int window = 10;         // W
  int reg_window = 5;      // s
  std::vector<int> dilation_schedule{0, 2, 4};
  LossWeights weights;
  LearningRates rates;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  PairMode pair_mode = PairMode::kNormalizedOffset;
  CompensationConfig compensation;
  RenderSettings render;
  SceneInit init;
  bool offset_foreground_only = false;  // exclude dynamic masks from the offset term
  std::uint64_t seed = 0;

  void validate() const;
};

// Throws InputError when epoch is outside the schedule.
int dilation_for_epoch(int epoch, const OptimConfig& config);

struct StepRecord {
  int frame = 0;
  int epoch = 0;
  int step = 0;
  LossBreakdown loss;
};

// Value and gradient of the full objective for scene k.
struct ObjectiveEvaluation {
  LossBreakdown loss;
  SceneGradient gradient;
};

struct PairTarget {
  int partner = 0;
  const GaussianScene* scene = nullptr;
  FlowField flow;  // on frame k's grid, pointing into the partner
  Mask mask;
};

// Every pair term is divided by s, so clipped pair sets weigh less.
ObjectiveEvaluation evaluate_objective(const GaussianScene& scene, const CameraIntrinsics& K,
                                       const std::vector<ViewTarget>& views, const std::vector<PairTarget>& pairs,
                                       const DepthMap& prior_depth, const Mask* foreground, const OptimConfig& config);

// Optimizer state and cached supervision for one frame.
class FrameOptimizer {
 public:
  FrameOptimizer(int frame, const VideoBundle& bundle, GaussianScene scene, const OptimConfig& config);

  // Runs one epoch against frozen partner scenes (indexed by frame).
  void run_epoch(int epoch, const std::vector<GaussianScene>& snapshot);

  const GaussianScene& scene() const { return scene_; }
  const std::vector<StepRecord>& history() const { return history_; }

 private:
  const ViewTarget& target(int i);
  const std::vector<PairTarget>& pairs(int d, const std::vector<GaussianScene>& snapshot);
  void apply(const SceneGradient& gradient);

  int frame_;
  const VideoBundle& bundle_;
  GaussianScene scene_;
  OptimConfig config_;
  std::mt19937_64 rng_;
  std::map<int, ViewTarget> targets_;
  std::map<int, std::vector<PairTarget>> pair_cache_;
  std::vector<double> m_, v_;
  long long t_ = 0;
  std::vector<StepRecord> history_;
  Mask foreground_;
};

struct OptimizationResult {
  std::vector<GaussianScene> scenes;
  std::vector<StepRecord> history;
};

std::vector<GaussianScene> build_scenes(const VideoBundle& bundle, const SceneInit& init);

// Epoch-synchronous optimization of all frames: within an epoch every frame
// reads its partners from the snapshot taken at the epoch start.
OptimizationResult optimize_all(const VideoBundle& bundle, std::vector<GaussianScene> scenes,
                                const OptimConfig& config);

// Optimizes frame k alone; partners stay at their initial scenes.
OptimizationResult optimize_scene(int k, const VideoBundle& bundle, const OptimConfig& config);

}  // namespace splatstab
