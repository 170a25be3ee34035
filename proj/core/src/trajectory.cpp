#include "splatstab/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "splatstab/error.hpp"

namespace splatstab {

int SmoothingConfig::resolved_window() const {
  if (window) return *window;
  return 2 * static_cast<int>(std::ceil(3.0 * sigma_s)) + 1;
}

void SmoothingConfig::validate() const {
  if (!(sigma_s > 0.0)) throw InputError("sigma_s must be positive");
  const int w = resolved_window();
  if (w < 1) throw InputError("window must be >= 1");
  if (w % 2 == 0) throw InputError("window must be odd");
}

FrameWeights gaussian_weights(int k, int window, double sigma_s, int frame_count, BoundaryMode boundary) {
  if (window < 1 || window % 2 == 0) throw InputError("window must be odd");
  if (!(sigma_s > 0.0)) throw InputError("sigma_s must be positive");
  if (frame_count < 1 || k < 0 || k >= frame_count) throw InputError("frame index out of range");

  int radius = window / 2;
  if (boundary == BoundaryMode::kShrink) radius = std::min({radius, k, frame_count - 1 - k});
  const int lo = std::max(0, k - radius);
  const int hi = std::min(frame_count - 1, k + radius);

  FrameWeights out{lo, {}};
  out.weights.reserve(hi - lo + 1);
  double total = 0.0;
  for (int i = lo; i <= hi; ++i) {
    const double r = std::abs(i - k) / sigma_s;
    const double g = std::exp(-0.5 * r * r);
    out.weights.push_back(g);
    total += g;
  }
  for (double& w : out.weights) w /= total;
  return out;
}

Trajectory smooth_trajectory(const Trajectory& trajectory, const SmoothingConfig& config) {
  if (trajectory.empty()) throw InputError("empty trajectory");
  config.validate();
  const int T = static_cast<int>(trajectory.size());
  const int window = config.resolved_window();

  Trajectory out(trajectory.size());
  for (int k = 0; k < T; ++k) {
    const FrameWeights fw = gaussian_weights(k, window, config.sigma_s, T, config.boundary);
    const Eigen::Quaterniond& center = trajectory[k].rotation;
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    Eigen::Vector4d q = Eigen::Vector4d::Zero();
    for (std::size_t n = 0; n < fw.weights.size(); ++n) {
      const Pose& p = trajectory[fw.first + n];
      const double w = fw.weights[n];
      t += w * p.translation;
      Eigen::Vector4d c = p.rotation.coeffs();
      if (p.rotation.dot(center) < 0.0) c = -c;
      q += w * c;
    }
    Eigen::Quaterniond r;
    r.coeffs() = q;
    out[k] = {r.normalized(), t};
  }
  return out;
}

std::vector<Pose> stabilizing_transforms(const Trajectory& src, const Trajectory& dst) {
  if (src.size() != dst.size()) throw InputError("trajectory length mismatch");
  std::vector<Pose> out;
  out.reserve(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) out.push_back(relative_pose(src[k], dst[k]));
  return out;
}

double second_difference_energy(const Trajectory& trajectory) {
  double e = 0.0;
  for (std::size_t k = 1; k + 1 < trajectory.size(); ++k) {
    e += (trajectory[k + 1].translation - 2.0 * trajectory[k].translation + trajectory[k - 1].translation)
             .squaredNorm();
  }
  return e;
}

}  // namespace splatstab
