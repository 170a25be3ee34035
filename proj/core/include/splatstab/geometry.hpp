#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

#include "splatstab/image.hpp"

namespace splatstab {

// Pinhole intrinsics. Pixel (u, v) = (fx * x / z + cx, fy * y / z + cy) for a
// camera-space point (x, y, z); pixel centers are at integer coordinates.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Eigen::Matrix3d matrix() const;
  Eigen::Matrix3d inverse_matrix() const;
  // Throws InputError when the invariants (positive focal lengths, principal
  // point inside the image) do not hold.
  void validate() const;
  CameraIntrinsics padded(int pad) const;
  CameraIntrinsics scaled(double factor) const;

  bool operator==(const CameraIntrinsics&) const = default;
};

// Rigid transform in the camera-to-world convention used throughout the
// library: X_world = rotation * X_camera + translation. Camera looks down +z,
// x right, y down.
struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Eigen::Vector3d& t) { return {Eigen::Quaterniond::Identity(), t}; }

  Pose inverse() const;
  // this ∘ other: apply `other` first, then `this`. Result rotation is renormalized.
  Pose operator*(const Pose& other) const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  // World point into this camera's frame.
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation.conjugate() * (world - translation);
  }
  Pose normalized() const;
};

// Quaternion with w >= 0 and unit norm; used to compare rotations up to sign.
Eigen::Quaterniond canonical(const Eigen::Quaterniond& q);
double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

struct DepthMap {
  ScalarField values;
  Mask valid;

  DepthMap() = default;
  DepthMap(int width, int height) : values(width, height, 0.0), valid(width, height, 0) {}
  static DepthMap uniform(int width, int height, double depth);

  int width() const { return values.width(); }
  int height() const { return values.height(); }
};

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;
  bool valid = false;
};

inline constexpr double kMinProjectionDepth = 1e-6;

Projection project(const Eigen::Vector3d& world, const CameraIntrinsics& K, const Pose& pose);
std::vector<Projection> project(const std::vector<Eigen::Vector3d>& world, const CameraIntrinsics& K,
                                const Pose& pose);

// World-frame points for every pixel of a depth map.
struct PointGrid {
  Grid<Eigen::Vector3d> points;
  Mask valid;
};

Eigen::Vector3d unproject_pixel(double u, double v, double depth, const CameraIntrinsics& K,
                                const Pose& pose);
// Throws InputError("shape mismatch") when the depth map and K disagree on size.
PointGrid unproject(const DepthMap& depth, const CameraIntrinsics& K, const Pose& pose);

// b ∘ inverse(a): the transform that carries pose a onto pose b.
Pose relative_pose(const Pose& a, const Pose& b);

// Homography mapping source pixels to destination pixels for cameras that share
// a center and differ only in orientation (camera-to-world rotations) and
// intrinsics: H = K_dst · R_dstᵀ · R_src · K_src⁻¹.
Eigen::Matrix3d rotation_homography(const CameraIntrinsics& K_dst, const Eigen::Quaterniond& R_dst,
                                    const Eigen::Quaterniond& R_src, const CameraIntrinsics& K_src);

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& H, const Eigen::Vector2d& p);

}  // namespace splatstab
