#pragma once

#include <vector>

#include "splatstab/bundle.hpp"
#include "splatstab/flow.hpp"
#include "splatstab/gsplat.hpp"

namespace splatstab {

struct LossWeights {
  double ssim = 0.2;
  double consistent = 0.1;
  double scale = 0.01;
  double offset = 0.1;
};

struct LossBreakdown {
  double rgb = 0.0;
  double consistent = 0.0;
  double scale = 0.0;
  double offset = 0.0;
  double total = 0.0;

  void combine(const LossWeights& w) { total = rgb + w.consistent * consistent + w.scale * scale + w.offset * offset; }
};

struct ImageLoss {
  double value = 0.0;
  Image gradient;  // d value / d render
};

// Masked L1 (mean over valid pixels and channels) plus λ·(1 − SSIM).
ImageLoss photometric_loss(const Image& render, const Image& target, const Mask& mask, double lambda_ssim);

// A supervision view for scene k: the target image at `pose`.
struct ViewTarget {
  int frame = 0;
  Pose pose;
  Image image;
  Mask mask;
};

// Builds the target for rendering frame k's scene at frame i's pose. Uses the
// total flow F_{i→k} when the bundle has it and the depth-induced camera flow
// otherwise.
ViewTarget make_view_target(const VideoBundle& bundle, int k, int i, const CompensationConfig& config);

// Views with an empty mask are skipped; the mean runs over the rest. Throws
// InputError when every view is empty. `gradient` may be null.
double loss_rgb(const GaussianScene& scene, const CameraIntrinsics& K, const std::vector<ViewTarget>& views,
                double lambda_ssim, const RenderSettings& settings, SceneGradient* gradient);

enum class PairMode {
  kNormalizedOffset,
  kRawMean,
};

// Per-pixel parameter channels compared by the pair regularizer.
inline constexpr int kPairChannels = 14;

struct PairResult {
  double value = 0.0;
  int matched = 0;
  SceneGradient grad_i;
  SceneGradient grad_j;
};

// Mean squared difference between scene_i's per-pixel parameters and scene_j's
// parameters sampled bilinearly at p + flow(p), over pixels where `mask` holds
// and every weighted tap has a primitive. `flow_i_to_j` lives on scene_i's grid.
PairResult pair_regularizer(const GaussianScene& scene_i, const GaussianScene& scene_j, const FlowField& flow_i_to_j,
                            const Mask& mask, PairMode mode = PairMode::kNormalizedOffset);

// Pair partners of frame i: i + j·(d+1) for j in [-⌊s/2⌋, ⌊s/2⌋], j ≠ 0,
// restricted to [0, frame_count).
std::vector<int> pair_partners(int i, int d, int s, int frame_count);
// Number of frames (2·max offset + 1) linked to a frame after each epoch of
// `schedule`, counting chains of pair constraints across epochs.
std::vector<int> cumulative_reach(int s, const std::vector<int>& schedule);
// d_e = s^e − 1: each epoch's pairs span exactly the previous reach.
std::vector<int> geometric_schedule(int s, int epochs);

double scale_threshold(double image_width, double depth);  // 70·w/D
double depth_threshold(double depth);                      // 0.2·D

// Masked mean of exp(scale) entries above their primitive's threshold.
double loss_scale(const GaussianScene& scene, double image_width, SceneGradient* gradient);

struct DepthLoss {
  double value = 0.0;
  int count = 0;
  ScalarField gradient;  // d value / d rendered depth
};

// Masked mean of |rendered − prior| over pixels whose deviation exceeds 0.2·prior.
// `foreground` may be null.
DepthLoss offset_term(const ScalarField& rendered_depth, const DepthMap& prior, const Mask* foreground);

double loss_offset(const GaussianScene& scene, const CameraIntrinsics& K, const Pose& pose, const DepthMap& prior,
                   const Mask* foreground, const RenderSettings& settings, SceneGradient* gradient);

}  // namespace splatstab
