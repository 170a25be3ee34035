#include "splatstab/scale_align.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "splatstab/error.hpp"

namespace splatstab {

void SparsePointSet::validate() const {
  for (const auto& p : points) {
    if (!p.allFinite()) throw InputError("sparse points must be finite");
  }
  for (const auto& [frame, indices] : visibility) {
    for (int idx : indices) {
      if (idx < 0 || idx >= static_cast<int>(points.size())) {
        throw InputError("visibility index out of range in frame " + std::to_string(frame));
      }
    }
  }
}

DepthMap sparse_depth(const SparsePointSet& points, const std::vector<int>& visible, const Pose& pose,
                      const CameraIntrinsics& K) {
  DepthMap out(K.width, K.height);
  for (int idx : visible) {
    if (idx < 0 || idx >= static_cast<int>(points.points.size())) throw InputError("visibility index out of range");
    const Projection pr = project(points.points[idx], K, pose);
    if (!pr.valid) continue;
    const int x = static_cast<int>(std::lround(pr.pixel.x()));
    const int y = static_cast<int>(std::lround(pr.pixel.y()));
    if (!out.values.contains(x, y)) continue;
    if (!out.valid(x, y) || pr.depth < out.values(x, y)) {
      out.values(x, y) = pr.depth;
      out.valid(x, y) = 1;
    }
  }
  return out;
}

ScaleEstimate ransac_log_scale(const DepthMap& dense, const DepthMap& sparse, const RansacConfig& config) {
  if (!dense.values.same_shape(sparse.values)) throw InputError("shape mismatch");
  if (config.sample_size < 1 || config.iterations < 1) throw InputError("invalid RANSAC configuration");

  // log(sparse) - log(dense) per overlapping pixel.
  std::vector<double> log_ratio;
  for (std::size_t i = 0; i < dense.values.size(); ++i) {
    if (!dense.valid[i] || !sparse.valid[i]) continue;
    const double d = dense.values[i];
    const double s = sparse.values[i];
    if (!(d > 0.0) || !(s > 0.0) || !std::isfinite(d) || !std::isfinite(s)) continue;
    log_ratio.push_back(std::log(s) - std::log(d));
  }
  const int n = static_cast<int>(log_ratio.size());
  if (n < config.sample_size) throw InputError("too few correspondences");

  std::mt19937_64 rng(config.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  ScaleEstimate best;
  best.seed = config.seed;
  best.sample_count = n;
  double best_log_scale = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    // Partial Fisher-Yates: the first sample_size entries form the sample.
    for (int j = 0; j < config.sample_size; ++j) {
      std::uniform_int_distribution<int> pick(j, n - 1);
      std::swap(order[j], order[pick(rng)]);
    }
    double mean = 0.0;
    for (int j = 0; j < config.sample_size; ++j) mean += log_ratio[order[j]];
    mean /= config.sample_size;
    int inliers = 0;
    for (double r : log_ratio) inliers += std::abs(r - mean) < config.tau;
    if (inliers > best.inlier_count) {
      best.inlier_count = inliers;
      best.best_iteration = it;
      best_log_scale = mean;
    }
  }

  // Refit on the inliers of the best model.
  double sum = 0.0;
  int count = 0;
  for (double r : log_ratio) {
    if (std::abs(r - best_log_scale) < config.tau) {
      sum += r;
      ++count;
    }
  }
  if (count > 0) {
    const double refit = sum / count;
    int inliers = 0;
    for (double r : log_ratio) inliers += std::abs(r - refit) < config.tau;
    best_log_scale = refit;
    best.inlier_count = inliers;
  }
  best.scale = std::exp(best_log_scale);
  return best;
}

double global_scale(std::vector<double> per_frame) {
  if (per_frame.empty()) throw InputError("empty scale sequence");
  const std::size_t mid = (per_frame.size() - 1) / 2;
  std::nth_element(per_frame.begin(), per_frame.begin() + mid, per_frame.end());
  return per_frame[mid];
}

ScaleAlignment align_scale(const std::vector<DepthMap>& dense_depths, const Trajectory& poses,
                           const SparsePointSet& points, const CameraIntrinsics& K, const RansacConfig& config) {
  if (dense_depths.size() != poses.size()) throw InputError("depth/pose count mismatch");
  points.validate();
  ScaleAlignment out;
  std::vector<double> scales;
  for (const auto& [frame, visible] : points.visibility) {
    if (frame < 0 || frame >= static_cast<int>(poses.size())) continue;
    const DepthMap sparse = sparse_depth(points, visible, poses[frame], K);
    try {
      out.per_frame.push_back(ransac_log_scale(dense_depths[frame], sparse, config));
      out.frames.push_back(frame);
      scales.push_back(out.per_frame.back().scale);
    } catch (const InputError&) {
      // not enough overlap in this frame
    }
  }
  out.global = global_scale(scales);
  return out;
}

void apply_global_scale(double alpha, Trajectory& poses, SparsePointSet& points) {
  if (!(alpha > 0.0)) throw InputError("scale must be positive");
  for (auto& p : poses) p.translation /= alpha;
  for (auto& x : points.points) x /= alpha;
}

}  // namespace splatstab
