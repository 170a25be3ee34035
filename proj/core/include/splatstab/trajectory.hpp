#pragma once

#include <optional>
#include <vector>

#include "splatstab/geometry.hpp"

namespace splatstab {

using Trajectory = std::vector<Pose>;

// How the filter window behaves near the first/last frame. Both variants only
// ever read real frames.
enum class BoundaryMode {
  // Window cut to [0, T-1], remaining weights renormalized.
  kClamp,
  // Window radius shrunk to the distance to the nearer end so it stays
  // symmetric; linear motion is then reproduced up to the endpoints.
  kShrink,
};

struct SmoothingConfig {
  double sigma_s = 4.0;
  // Odd frame count; nullopt selects 2 * ceil(3 * sigma_s) + 1.
  std::optional<int> window;
  BoundaryMode boundary = BoundaryMode::kClamp;

  int resolved_window() const;
  void validate() const;
};

struct FrameWeights {
  int first = 0;  // frame index of weights[0]
  std::vector<double> weights;
};

// Normalized Gaussian weights g*(i, k) over the window around frame k.
// Throws InputError("window must be odd") for even windows.
FrameWeights gaussian_weights(int k, int window, double sigma_s, int frame_count,
                              BoundaryMode boundary = BoundaryMode::kClamp);

// Translations: weighted mean. Rotations: quaternions sign-aligned to the
// center frame, blended with the same weights and renormalized.
Trajectory smooth_trajectory(const Trajectory& trajectory, const SmoothingConfig& config);

// Per-frame dst_k ∘ inverse(src_k).
std::vector<Pose> stabilizing_transforms(const Trajectory& src, const Trajectory& dst);

// Σ_k |t_{k+1} - 2 t_k + t_{k-1}|² over translations.
double second_difference_energy(const Trajectory& trajectory);

}  // namespace splatstab
