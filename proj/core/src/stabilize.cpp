#include "splatstab/stabilize.hpp"

#include "splatstab/error.hpp"
#include "splatstab/extrapolate.hpp"
#include "splatstab/gsplat.hpp"

namespace splatstab {

StabilizeResult stabilize(const VideoBundle& bundle, const StabilizeConfig& config) {
  bundle.validate();
  config.smoothing.validate();
  config.optim.validate();

  const PaddedBundle padded = extrapolate_frames(bundle, config.pad, config.optim.window);
  OptimizationResult opt = optimize_all(padded.bundle, build_scenes(padded.bundle, config.optim.init), config.optim);

  StabilizeResult result;
  result.padded_intrinsics = padded.bundle.intrinsics;
  result.poses_smooth = smooth_trajectory(bundle.poses, config.smoothing);
  result.history = std::move(opt.history);
  const CameraIntrinsics& K = bundle.intrinsics;
  for (int k = 0; k < bundle.frame_count(); ++k) {
    const RenderOutput out = render(opt.scenes[k], K, result.poses_smooth[k], config.optim.render);
    Mask valid(K.width, K.height, 0);
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = out.alpha[i] > config.valid_alpha ? 1 : 0;
    result.frames.push_back(out.color);
    result.valid.push_back(std::move(valid));
  }
  result.scenes = std::move(opt.scenes);
  return result;
}

}  // namespace splatstab
