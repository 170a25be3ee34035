#pragma once

#include <vector>

#include "splatstab/geometry.hpp"
#include "splatstab/image.hpp"

namespace splatstab {

struct GyroSample {
  double t = 0.0;  // seconds
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();  // camera-to-world orientation
};

struct OisSample {
  double t = 0.0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();  // lens shift in pixels
};

struct GyroLog {
  std::vector<GyroSample> samples;
  void validate() const;  // strictly increasing timestamps, non-empty
};

struct OisLog {
  std::vector<OisSample> samples;
  void validate() const;
  static OisLog zero(double t0, double t1);
};

template <typename T>
struct Lookup {
  T value;
  bool clamped = false;  // query fell outside the log and was clamped to an endpoint
};

// Slerp between the bracketing samples; exact at sample timestamps.
Lookup<Eigen::Quaterniond> interpolate_rotation(const GyroLog& log, double t);
Lookup<Eigen::Vector2d> interpolate_ois(const OisLog& log, double t);

// Sign-aligned normalized average of the samples with t0 <= t <= t1.
// Throws InputError when no sample falls in the window.
Eigen::Quaterniond mean_rotation(const GyroLog& log, double t0, double t1);

// Linear readout: t(row) = frame_start + row * readout_duration / height.
struct ReadoutModel {
  double frame_start = 0.0;
  double readout_duration = 0.0;
  int height = 1;

  double row_time(double row) const { return frame_start + row * readout_duration / height; }
};

// Grid vertices of the row-block mesh. `src` is regular with spacing
// `block_size` in both directions; `dst` holds where each vertex lands in the
// corrected frame.
struct WarpGrid {
  Grid<Eigen::Vector2d> src;
  Grid<Eigen::Vector2d> dst;
  int block_size = 32;
};

Grid<Eigen::Vector2d> mesh_grid(int width, int height, int block_size);

// Per-pixel sampling offsets for the corrected frame: output pixel p reads the
// source frame at p + (u, v)(p). Piecewise linear over the dst mesh, each cell
// split along its main diagonal; exact at grid vertices. Pixels not covered by
// the mesh are invalid.
FlowField dense_warp_from_grid(const WarpGrid& grid, int out_width, int out_height);

struct SampledImage {
  Image image;
  Mask valid;
};

// Bilinear lookup of `image` at p + field(p); out-of-bounds reads are masked.
SampledImage grid_sample(const Image& image, const FlowField& field);

struct RollingShutterConfig {
  int block_size = 32;
  double frame_start = 0.0;
  double readout_duration = 0.0;
};

struct RollingShutterResult {
  Image image;
  Mask valid;  // rolling-shutter mask: false where the corrected frame has no source content
  WarpGrid grid;
  FlowField field;
  Eigen::Quaterniond dst_rotation = Eigen::Quaterniond::Identity();
};

// Row-block homography correction towards the mean rotation with zero OIS.
RollingShutterResult rs_remove_frame(const Image& frame, const CameraIntrinsics& K, const GyroLog& gyro,
                                     const OisLog& ois, const RollingShutterConfig& config);

}  // namespace splatstab
