#include <gtest/gtest.h>

#include <cmath>

#include "splatstab/error.hpp"
#include "splatstab/extrapolate.hpp"
#include "splatstab/metrics.hpp"
#include "splatstab/stabilize.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;

namespace {

StabilizeConfig fast_stabilize(int pad, int steps) {
  StabilizeConfig c;
  c.pad = pad;
  c.optim.steps_per_epoch = steps;
  c.optim.views_per_step = 2;
  return c;
}

}  // namespace

TEST(Extrapolate, ZeroPadIsIdentity) {
  SceneSpec s = default_scene_spec(24, 18, 3, 1);
  s.flow_window = 2;
  const VideoBundle b = generate(s);
  const PaddedBundle p = extrapolate_frames(b, 0);
  EXPECT_EQ(p.pad, 0);
  EXPECT_EQ(p.bundle.intrinsics, b.intrinsics);
  for (int k = 0; k < b.frame_count(); ++k) {
    EXPECT_EQ(p.bundle.frames[k], b.frames[k]);
    EXPECT_EQ(p.bundle.depths[k].values, b.depths[k].values);
    for (auto v : p.fill[k].data()) EXPECT_EQ(v, kFillOriginal);
  }
  EXPECT_THROW(extrapolate_frames(b, -1), InputError);
}

TEST(Extrapolate, PanningBorderMatchesWiderRender) {
  SceneSpec s = default_scene_spec(48, 36, 9, 2);
  s.trajectory.velocity = {6.0, 0, 0};
  s.flow_window = 4;
  const VideoBundle b = generate(s);
  const int pad = 8;
  const PaddedBundle p = extrapolate_frames(b, pad, 4);
  const CameraIntrinsics wide = b.intrinsics.padded(pad);
  EXPECT_EQ(p.bundle.intrinsics, wide);

  const int k = 4;
  const RenderedFrame truth = render_synthetic(s, wide, b.poses[k], k / s.frame_rate);
  Mask propagated(wide.width, wide.height, 0);
  int count = 0;
  for (std::size_t i = 0; i < propagated.size(); ++i) {
    if (p.fill[k][i] == kFillPropagated) {
      propagated[i] = 1;
      ++count;
    }
  }
  ASSERT_GT(count, 100);
  EXPECT_GT(psnr(p.bundle.frames[k], truth.image, &propagated), 25.0);
  // Original pixels are untouched.
  for (int y = 0; y < b.intrinsics.height; ++y) {
    for (int x = 0; x < b.intrinsics.width; ++x) {
      EXPECT_EQ(p.fill[k](x + pad, y + pad), kFillOriginal);
      EXPECT_EQ(p.bundle.frames[k](x + pad, y + pad, 1), b.frames[k](x, y, 1));
    }
  }
  for (const auto& [key, f] : p.bundle.flows) {
    EXPECT_EQ(f.width(), wide.width);
    EXPECT_EQ(f.height(), wide.height);
  }
}

TEST(Extrapolate, EveryPaddedPixelIsFilled) {
  SceneSpec s = default_scene_spec(20, 16, 2, 3);
  s.flow_window = 1;
  const PaddedBundle p = extrapolate_frames(generate(s), 6);
  for (const DepthMap& d : p.bundle.depths) {
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      EXPECT_TRUE(d.valid[i]);
      EXPECT_GT(d.values[i], 0.0);
    }
  }
}

TEST(Stabilize, TinySigmaReproducesInput) {
  SceneSpec s = default_scene_spec(48, 48, 4, 4);
  s.planes.clear();
  PlaneSpec plane;
  plane.point = {0, 0, 3};
  plane.texture = {TextureKind::kValueNoise, 1.0, 11, 1};
  s.planes.push_back(plane);
  s.trajectory.jitter_translation = 0.01;
  s.trajectory.seed = 4;
  const VideoBundle b = generate(s);
  StabilizeConfig c = fast_stabilize(4, 10);
  c.smoothing.sigma_s = 1e-3;
  c.smoothing.window = 1;
  const StabilizeResult r = stabilize(b, c);
  ASSERT_EQ(r.frames.size(), b.frames.size());
  for (int k = 0; k < b.frame_count(); ++k) {
    EXPECT_EQ(r.poses_smooth[k].translation, b.poses[k].translation);
    EXPECT_EQ(r.frames[k], render(r.scenes[k], b.intrinsics, b.poses[k], c.optim.render).color);
    EXPECT_GT(psnr(r.frames[k], b.frames[k]), 35.0) << "frame " << k;
  }
}

TEST(Stabilize, SmoothPathIsKept) {
  SceneSpec s = default_scene_spec(24, 18, 12, 5);
  s.flow_window = 2;
  const VideoBundle b = generate(s);
  StabilizeConfig c = fast_stabilize(2, 0);
  c.optim.window = 2;
  c.smoothing.boundary = BoundaryMode::kShrink;
  const StabilizeResult r = stabilize(b, c);
  for (int k = 0; k < b.frame_count(); ++k) {
    EXPECT_LT((r.poses_smooth[k].translation - b.poses[k].translation).norm(), 1e-3);
    EXPECT_LT(rotation_angle_between(r.poses_smooth[k].rotation, b.poses[k].rotation) * 180.0 / M_PI, 0.1);
  }
}

TEST(Stabilize, ShakyVideoGetsMoreStable) {
  SceneSpec s = default_scene_spec(24, 18, 40, 6);
  s.trajectory.jitter_translation = 0.02;
  s.trajectory.jitter_rotation_deg = 0.8;
  s.trajectory.seed = 6;
  s.flow_window = 1;
  s.sparse_points = 60;
  const VideoBundle b = generate(s);
  StabilizeConfig c = fast_stabilize(2, 0);
  c.optim.window = 1;
  c.smoothing.sigma_s = 4.0;
  const StabilizeResult r = stabilize(b, c);
  ASSERT_EQ(r.frames.size(), b.frames.size());
  const auto& pts = b.points->points;
  const double before = stability(project_tracks(pts, b.intrinsics, b.poses));
  const double after = stability(project_tracks(pts, b.intrinsics, r.poses_smooth));
  EXPECT_GT(after, before);
}
