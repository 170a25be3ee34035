#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "splatstab/geometry.hpp"
#include "splatstab/gsplat.hpp"
#include "splatstab/image.hpp"
#include "splatstab/trajectory.hpp"

namespace splatstab {

struct Track {
  std::vector<std::optional<Eigen::Vector2d>> points;  // one entry per frame, nullopt when not visible
};
using TrackSet = std::vector<Track>;

using Correspondence = std::pair<Eigen::Vector2d, Eigen::Vector2d>;  // (source, target)
using CorrespondenceSet = std::vector<Correspondence>;

struct Observation {
  int point = 0;
  int frame = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct MetricReport {
  std::optional<double> cropping_ratio;
  std::optional<double> distortion;
  std::optional<double> stability;
  std::optional<double> gc_sparse;
  std::optional<double> gc_dense;
  std::vector<double> distortion_per_frame;
  std::vector<int> distortion_skipped;
};

// Area of the largest axis-aligned rectangle of non-zero mask pixels.
long long largest_valid_rectangle(const Mask& mask);
// Mean over frames of largest_valid_rectangle / frame area.
double cropping_ratio(const std::vector<Mask>& valid);

// Normalized DLT. Returns nullopt for fewer than 4 correspondences or a
// rank-deficient system. The result is scaled so H(2,2) = 1.
std::optional<Eigen::Matrix3d> fit_homography(const CorrespondenceSet& correspondences);
// Ratio of the smaller to the larger singular value of H's upper-left 2×2 block.
double anisotropy(const Eigen::Matrix3d& H);

struct DistortionResult {
  double value = 1.0;  // minimum over fitted frames
  std::vector<double> per_frame;  // NaN for skipped frames
  std::vector<int> skipped;
};
// Throws NumericalError when no frame can be fitted.
DistortionResult distortion(const std::vector<CorrespondenceSet>& frames);

inline constexpr int kMinStabilityLength = 32;

// Low-frequency energy ratio of one detrended 1D signal: DFT energy in bins
// 2..6 over bins 2..N/2. Returns 1 for a signal with no residual energy and
// nullopt when shorter than kMinStabilityLength.
std::optional<double> stability_component(const std::vector<double>& signal);
// Mean component score over the x and y axes of every track, using each
// track's longest run of visible frames. Throws InputError when no track is
// long enough.
double stability(const TrackSet& tracks);
// Tracks of world points as seen through a camera path.
TrackSet project_tracks(const std::vector<Eigen::Vector3d>& points, const CameraIntrinsics& K,
                        const Trajectory& poses);

// Mean reprojection error in pixels. Throws InputError("no observations").
double gc_sparse(const std::vector<Eigen::Vector3d>& points, const std::vector<Observation>& observations,
                 const CameraIntrinsics& K, const Trajectory& poses);

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kHoldoutInterval = 8;

// PSNR over pixels where `mask` holds (all when null), signal peak 1, capped.
double psnr(const Image& a, const Image& b, const Mask* mask = nullptr);

// Held-out frames are those with index % interval == 0. Each is predicted by
// averaging renders of the two nearest kept frames' scenes at its pose, and
// scored on pixels outside its dynamic mask. Needs at least 16 frames.
double gc_dense(const std::vector<Image>& frames, const std::vector<GaussianScene>& scenes, const Trajectory& poses,
                const CameraIntrinsics& K, const std::vector<Mask>& dynamic_masks, int interval = kHoldoutInterval,
                const RenderSettings& settings = {});

}  // namespace splatstab
