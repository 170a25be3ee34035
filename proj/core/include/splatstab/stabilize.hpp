#pragma once

#include <vector>

#include "splatstab/bundle.hpp"
#include "splatstab/optimize.hpp"
#include "splatstab/trajectory.hpp"

namespace splatstab {

struct StabilizeConfig {
  SmoothingConfig smoothing;
  int pad = 96;
  OptimConfig optim;
  double valid_alpha = 0.5;  // output pixels with lower accumulated alpha count as holes
};

struct StabilizeResult {
  std::vector<Image> frames;  // original resolution
  std::vector<Mask> valid;
  Trajectory poses_smooth;
  std::vector<GaussianScene> scenes;  // optimized scenes on the padded grid
  CameraIntrinsics padded_intrinsics;
  std::vector<StepRecord> history;
};

// extrapolate → build scenes → optimize → smooth → render each scene k at the
// smoothed pose k with the original intrinsics.
StabilizeResult stabilize(const VideoBundle& bundle, const StabilizeConfig& config);

}  // namespace splatstab
