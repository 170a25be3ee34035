#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "splatstab/error.hpp"
#include "splatstab/flow.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;

namespace {

SceneSpec small_static(int frames = 6) {
  SceneSpec s = default_scene_spec(40, 30, frames, 5);
  s.flow_window = 2;
  return s;
}

}  // namespace

TEST(Synthetic, StaticTotalEqualsCameraFlow) {
  const VideoBundle b = generate(small_static());
  ASSERT_FALSE(b.flows.empty());
  for (const auto& [key, total] : b.flows) {
    const FlowField& cam = b.camera_flows.at(key);
    EXPECT_EQ(total.u, cam.u);
    EXPECT_EQ(total.v, cam.v);
    EXPECT_EQ(total.valid, cam.valid);
  }
  for (const Mask& m : b.dynamic_masks) {
    for (auto v : m.data()) EXPECT_EQ(v, 0);
  }
}

TEST(Synthetic, ZeroJitterPosesMatchSmoothPath) {
  SceneSpec s = small_static();
  s.trajectory.jitter_translation = 0.0;
  s.trajectory.jitter_rotation_deg = 0.0;
  const VideoBundle b = generate(s);
  ASSERT_EQ(b.poses.size(), b.poses_smooth.size());
  for (std::size_t k = 0; k < b.poses.size(); ++k) {
    EXPECT_EQ(b.poses[k].translation, b.poses_smooth[k].translation);
    EXPECT_EQ(b.poses[k].rotation.coeffs(), b.poses_smooth[k].rotation.coeffs());
  }
}

TEST(Synthetic, JitterMovesPosesOffThePath) {
  SceneSpec s = small_static();
  s.trajectory.jitter_translation = 0.01;
  s.trajectory.jitter_rotation_deg = 0.5;
  const VideoBundle b = generate(s);
  double moved = 0.0;
  for (std::size_t k = 0; k < b.poses.size(); ++k) {
    moved += (b.poses[k].translation - b.poses_smooth[k].translation).norm();
  }
  EXPECT_GT(moved, 0.0);
}

TEST(Synthetic, Deterministic) {
  SceneSpec s = dynamic_scene_spec(32, 24, 4, 9);
  s.trajectory.jitter_translation = 0.01;
  s.trajectory.jitter_rotation_deg = 0.3;
  s.flow_window = 1;
  const VideoBundle a = generate(s);
  const VideoBundle b = generate(s);
  ASSERT_EQ(a.frame_count(), b.frame_count());
  for (int k = 0; k < a.frame_count(); ++k) {
    EXPECT_EQ(a.frames[k], b.frames[k]);
    EXPECT_EQ(a.depths[k].values, b.depths[k].values);
    EXPECT_EQ(a.dynamic_masks[k], b.dynamic_masks[k]);
  }
  for (const auto& [key, f] : a.flows) {
    EXPECT_EQ(f.u, b.flows.at(key).u);
    EXPECT_EQ(f.v, b.flows.at(key).v);
  }
}

TEST(Synthetic, ObjectFlowOnlyInsideDynamicMask) {
  SceneSpec s = dynamic_scene_spec(48, 36, 4, 2);
  s.flow_window = 3;
  const VideoBundle b = generate(s);
  bool any_object_motion = false;
  for (const auto& [key, total] : b.flows) {
    const FlowField& cam = b.camera_flows.at(key);
    const Mask& dyn = b.dynamic_masks[key.first];
    for (int y = 0; y < total.height(); ++y) {
      for (int x = 0; x < total.width(); ++x) {
        if (!total.valid(x, y) || !cam.valid(x, y)) continue;
        const double du = total.u(x, y) - cam.u(x, y);
        const double dv = total.v(x, y) - cam.v(x, y);
        if (!dyn(x, y)) {
          EXPECT_EQ(du, 0.0);
          EXPECT_EQ(dv, 0.0);
        } else if (std::hypot(du, dv) > 1e-3) {
          any_object_motion = true;
        }
      }
    }
  }
  EXPECT_TRUE(any_object_motion);
}

TEST(Synthetic, CameraFlowMatchesReprojection) {
  SceneSpec s = dynamic_scene_spec(40, 30, 3, 4);
  s.trajectory.yaw_rate_deg = 20.0;
  s.flow_window = 2;
  const VideoBundle b = generate(s);
  const auto& K = b.intrinsics;
  for (const auto& [key, cam] : b.camera_flows) {
    const PointGrid pts = unproject(b.depths[key.first], K, b.poses[key.first]);
    const FlowField& total = b.flows.at(key);
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        if (!pts.valid(x, y) || b.dynamic_masks[key.first](x, y) || !total.valid(x, y)) continue;
        const Projection p = project(pts.points(x, y), K, b.poses[key.second]);
        ASSERT_TRUE(p.valid);
        EXPECT_NEAR(p.pixel.x() - x, total.u(x, y), 1e-6);
        EXPECT_NEAR(p.pixel.y() - y, total.v(x, y), 1e-6);
      }
    }
  }
}

TEST(Synthetic, GyroSampledFromPoses) {
  SceneSpec s = small_static(4);
  s.trajectory.jitter_rotation_deg = 0.5;
  const VideoBundle b = generate(s);
  ASSERT_TRUE(b.gyro.has_value());
  EXPECT_EQ(static_cast<int>(b.gyro->samples.size()), (s.frames - 1) * s.gyro_rate_factor + 1);
  for (int k = 0; k < s.frames; ++k) {
    const auto& sample = b.gyro->samples[k * s.gyro_rate_factor];
    EXPECT_NEAR(sample.t, k / s.frame_rate, 1e-12);
    EXPECT_LT(rotation_angle_between(sample.rotation, b.poses[k].rotation), 1e-9);
  }
}

TEST(Synthetic, SparsePointsProjectInsideVisibleFrames) {
  const VideoBundle b = generate(small_static(3));
  ASSERT_TRUE(b.points.has_value());
  const auto obs = sparse_observations(b);
  ASSERT_FALSE(obs.empty());
  for (const auto& o : obs) {
    EXPECT_GE(o.pixel.x(), 0.0);
    EXPECT_LE(o.pixel.x(), b.intrinsics.width - 1);
    EXPECT_GE(o.pixel.y(), 0.0);
    EXPECT_LE(o.pixel.y(), b.intrinsics.height - 1);
  }
}

TEST(Synthetic, InvalidSpecs) {
  SceneSpec s = small_static();
  s.frames = 1;
  EXPECT_THROW(generate(s), InputError);
  SceneSpec inside = dynamic_scene_spec(32, 24, 3, 0);
  inside.object->center = Eigen::Vector3d::Zero();
  inside.object->velocity = Eigen::Vector3d::Zero();
  inside.object->kind = ObjectKind::kCylinder;
  EXPECT_THROW(generate(inside), InputError);
}

TEST(RsWarp, ZeroRampLeavesFramesUnchanged) {
  const SceneSpec s = small_static(2);
  const VideoBundle b = generate(s);
  RollingShutterSpec rs;
  rs.yaw_ramp_deg = 0.0;
  const RollingShutterCapture cap = rs_warp(s, b, rs);
  ASSERT_EQ(cap.frames.size(), b.frames.size());
  for (int k = 0; k < b.frame_count(); ++k) EXPECT_EQ(cap.frames[k], b.frames[k]);
}

TEST(RsWarp, RowsShearByTheirReadoutRotation) {
  SceneSpec s = default_scene_spec(96, 72, 2, 8);
  s.trajectory.velocity = Eigen::Vector3d::Zero();
  const VideoBundle b = generate(s);
  RollingShutterSpec rs;
  rs.yaw_ramp_deg = 2.0;
  const RollingShutterCapture cap = rs_warp(s, b, rs);
  const CameraIntrinsics& K = b.intrinsics;
  const Pose& pose = b.poses[0];
  for (int row : {0, K.height / 2, K.height - 1}) {
    const double fraction = static_cast<double>(row) / K.height;
    const double theta = rs.yaw_ramp_deg * fraction * M_PI / 180.0;
    const Eigen::Quaterniond R = readout_rotation(pose, rs.yaw_ramp_deg, fraction);
    // Pure yaw moves the principal point horizontally by fx·tan(θ).
    const Eigen::Matrix3d H = rotation_homography(K, pose.rotation, R, K);
    const Eigen::Vector2d centre = (H * Eigen::Vector3d(K.cx, K.cy, 1.0)).hnormalized();
    EXPECT_NEAR(centre.x() - K.cx, K.fx * std::tan(theta), 1e-9);
    EXPECT_NEAR(centre.y(), K.cy, 1e-9);

    const RenderedFrame exact = render_synthetic(s, K, {R, pose.translation}, 0.0);
    double via_h = 0.0, unwarped = 0.0;
    int n = 0;
    for (int x = 0; x < K.width; ++x) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(cap.frames[0](x, row, c), exact.image(x, row, c));
      const Eigen::Vector2d src = (H * Eigen::Vector3d(x, row, 1.0)).hnormalized();
      double g[3];
      if (!sample_bilinear(b.frames[0], src.x(), std::clamp(src.y(), 0.0, K.height - 1.0), g)) continue;
      via_h += std::abs(cap.frames[0](x, row, 1) - g[1]);
      unwarped += std::abs(cap.frames[0](x, row, 1) - b.frames[0](x, row, 1));
      ++n;
    }
    ASSERT_GT(n, K.width / 2);
    if (row > 0) EXPECT_LT(via_h, unwarped) << "row " << row;
  }
}

TEST(RsWarp, LogsDescribeTheReadout) {
  const SceneSpec s = small_static(3);
  const VideoBundle b = generate(s);
  RollingShutterSpec rs;
  const RollingShutterCapture cap = rs_warp(s, b, rs);
  EXPECT_EQ(static_cast<int>(cap.gyro.samples.size()), rs.gyro_samples * s.frames);
  ASSERT_EQ(cap.readouts.size(), 3u);
  EXPECT_DOUBLE_EQ(cap.readouts[1].frame_start, 1.0 / s.frame_rate);
  EXPECT_DOUBLE_EQ(cap.readouts[1].readout_duration, rs.readout_duration);
  rs.readout_duration = 1.0;
  EXPECT_THROW(rs_warp(s, b, rs), InputError);
}
