#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "splatstab/geometry.hpp"
#include "splatstab/trajectory.hpp"

namespace splatstab {

// Structure-from-motion points with per-frame visibility lists.
struct SparsePointSet {
  std::vector<Eigen::Vector3d> points;
  std::map<int, std::vector<int>> visibility;

  void validate() const;
};

struct ScaleEstimate {
  double scale = 1.0;  // sparse ≈ scale · dense
  int inlier_count = 0;
  int sample_count = 0;  // overlapping valid pixels considered
  int best_iteration = -1;
  std::uint64_t seed = 0;
};

struct RansacConfig {
  int iterations = 256;
  double tau = 0.1;  // inlier threshold on |log sparse - log(scale·dense)|
  int sample_size = 8;
  std::uint64_t seed = 0;
};

// Nearest-pixel splat of the listed points into a depth map at `pose`;
// collisions keep the nearer depth.
DepthMap sparse_depth(const SparsePointSet& points, const std::vector<int>& visible, const Pose& pose,
                      const CameraIntrinsics& K);

// Log-space RANSAC on overlapping valid pixels, followed by a refit on the
// best model's inliers. Throws InputError("too few correspondences").
ScaleEstimate ransac_log_scale(const DepthMap& dense, const DepthMap& sparse, const RansacConfig& config);

// Lower median. Throws InputError on an empty list.
double global_scale(std::vector<double> per_frame);

struct ScaleAlignment {
  std::vector<int> frames;
  std::vector<ScaleEstimate> per_frame;
  double global = 1.0;
};

// One RANSAC estimate per frame that has visible points and a dense depth,
// then the median. Frames without enough overlap are skipped.
ScaleAlignment align_scale(const std::vector<DepthMap>& dense_depths, const Trajectory& poses,
                           const SparsePointSet& points, const CameraIntrinsics& K, const RansacConfig& config);

// Brings SfM poses and points to the metric depth scale: translations and
// points are divided by `alpha` (alpha maps metric depth to SfM units).
void apply_global_scale(double alpha, Trajectory& poses, SparsePointSet& points);

}  // namespace splatstab
