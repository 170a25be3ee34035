#include "splatstab/geometry.hpp"

#include <cmath>

#include "splatstab/error.hpp"

namespace splatstab {

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Eigen::Matrix3d CameraIntrinsics::inverse_matrix() const {
  Eigen::Matrix3d K;
  K << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return K;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InputError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InputError("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw InputError("intrinsics: principal point outside the image");
  }
}

CameraIntrinsics CameraIntrinsics::padded(int pad) const {
  CameraIntrinsics out = *this;
  out.cx += pad;
  out.cy += pad;
  out.width += 2 * pad;
  out.height += 2 * pad;
  return out;
}

CameraIntrinsics CameraIntrinsics::scaled(double factor) const {
  CameraIntrinsics out = *this;
  out.fx *= factor;
  out.fy *= factor;
  out.cx *= factor;
  out.cy *= factor;
  out.width = static_cast<int>(std::lround(width * factor));
  out.height = static_cast<int>(std::lround(height * factor));
  return out;
}

Pose Pose::inverse() const {
  const Eigen::Quaterniond r = rotation.conjugate();
  return {r, -(r * translation)};
}

Pose Pose::operator*(const Pose& other) const {
  return {(rotation * other.rotation).normalized(), rotation * other.translation + translation};
}

Pose Pose::normalized() const { return {rotation.normalized(), translation}; }

Eigen::Quaterniond canonical(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond n = q.normalized();
  if (n.w() < 0.0) n.coeffs() = -n.coeffs();
  return n;
}

double rotation_angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double d = std::abs(a.normalized().dot(b.normalized()));
  return 2.0 * std::acos(std::min(1.0, d));
}

DepthMap DepthMap::uniform(int width, int height, double depth) {
  DepthMap out(width, height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = depth;
    out.valid[i] = 1;
  }
  return out;
}

Projection project(const Eigen::Vector3d& world, const CameraIntrinsics& K, const Pose& pose) {
  Projection out;
  const Eigen::Vector3d c = pose.to_camera(world);
  out.depth = c.z();
  if (!(c.z() > kMinProjectionDepth)) return out;
  out.pixel = {K.fx * c.x() / c.z() + K.cx, K.fy * c.y() / c.z() + K.cy};
  out.valid = std::isfinite(out.pixel.x()) && std::isfinite(out.pixel.y());
  return out;
}

std::vector<Projection> project(const std::vector<Eigen::Vector3d>& world, const CameraIntrinsics& K,
                                const Pose& pose) {
  std::vector<Projection> out;
  out.reserve(world.size());
  for (const auto& p : world) out.push_back(project(p, K, pose));
  return out;
}

Eigen::Vector3d unproject_pixel(double u, double v, double depth, const CameraIntrinsics& K,
                                const Pose& pose) {
  const Eigen::Vector3d cam((u - K.cx) / K.fx * depth, (v - K.cy) / K.fy * depth, depth);
  return pose.apply(cam);
}

PointGrid unproject(const DepthMap& depth, const CameraIntrinsics& K, const Pose& pose) {
  if (depth.width() != K.width || depth.height() != K.height || !depth.valid.same_shape(depth.values)) {
    throw InputError("shape mismatch");
  }
  PointGrid out{Grid<Eigen::Vector3d>(K.width, K.height, Eigen::Vector3d::Zero()), Mask(K.width, K.height, 0)};
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const double d = depth.values(x, y);
      if (!depth.valid(x, y) || !std::isfinite(d) || !(d > 0.0)) continue;
      out.points(x, y) = unproject_pixel(x, y, d, K, pose);
      out.valid(x, y) = 1;
    }
  }
  return out;
}

Pose relative_pose(const Pose& a, const Pose& b) { return b * a.inverse(); }

Eigen::Matrix3d rotation_homography(const CameraIntrinsics& K_dst, const Eigen::Quaterniond& R_dst,
                                    const Eigen::Quaterniond& R_src, const CameraIntrinsics& K_src) {
  const Eigen::Matrix3d R = (R_dst.normalized().conjugate() * R_src.normalized()).toRotationMatrix();
  return K_dst.matrix() * R * K_src.inverse_matrix();
}

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& H, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = H * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

}  // namespace splatstab
