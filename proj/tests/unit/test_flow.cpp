#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "splatstab/flow.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;

namespace {

CameraIntrinsics cam() { return {100, 100, 31.5, 23.5, 64, 48}; }

FlowField uniform_flow(int w, int h, double u, double v) {
  FlowField f(w, h);
  for (double& x : f.u.data()) x = u;
  for (double& x : f.v.data()) x = v;
  return f;
}

}  // namespace

TEST(CameraFlow, SamePoseIsZero) {
  const FlowField f = camera_flow(DepthMap::uniform(64, 48, 3.0), Pose::identity(), Pose::identity(), cam());
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    ASSERT_TRUE(f.valid[i]);
    EXPECT_NEAR(f.u[i], 0.0, 1e-12);
    EXPECT_NEAR(f.v[i], 0.0, 1e-12);
  }
}

TEST(CameraFlow, LateralTranslationByHand) {
  const FlowField f =
      camera_flow(DepthMap::uniform(64, 48, 2.0), Pose::identity(), Pose::from_translation({0.1, 0, 0}), cam());
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    EXPECT_NEAR(f.u[i], -5.0, 1e-9);
    EXPECT_NEAR(f.v[i], 0.0, 1e-9);
  }
}

TEST(CameraFlow, PureRotationIsDepthInvariant) {
  Pose rotated;
  rotated.rotation = Eigen::AngleAxisd(0.05, Eigen::Vector3d(0.3, 1, 0.1).normalized());
  const FlowField a = camera_flow(DepthMap::uniform(64, 48, 2.0), Pose::identity(), rotated, cam());
  const FlowField b = camera_flow(DepthMap::uniform(64, 48, 9.0), Pose::identity(), rotated, cam());
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    EXPECT_NEAR(a.u[i], b.u[i], 1e-6);
    EXPECT_NEAR(a.v[i], b.v[i], 1e-6);
  }
}

TEST(CameraFlow, InvalidDepthStaysInvalid) {
  DepthMap d = DepthMap::uniform(64, 48, 2.0);
  d.valid(5, 5) = 0;
  EXPECT_FALSE(camera_flow(d, Pose::identity(), Pose::identity(), cam()).valid(5, 5));
}

TEST(ForwardSplat, ZeroFlow) {
  const FlowField f = forward_splat_flow(FlowField(10, 8));
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    ASSERT_TRUE(f.valid[i]);
    EXPECT_EQ(f.u[i], 0.0);
  }
}

TEST(ForwardSplat, UniformIntegerShiftLeavesLeftHole) {
  const FlowField f = forward_splat_flow(uniform_flow(12, 6, 3, 0));
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 12; ++x) {
      if (x < 3) {
        EXPECT_FALSE(f.valid(x, y));
      } else {
        ASSERT_TRUE(f.valid(x, y));
        EXPECT_DOUBLE_EQ(f.u(x, y), -3.0);
        EXPECT_DOUBLE_EQ(f.v(x, y), 0.0);
      }
    }
  }
}

TEST(ForwardSplat, CollidingDepositsAverage) {
  FlowField f(5, 1);
  f.valid = Mask(5, 1, 0);
  f.valid(0, 0) = f.valid(4, 0) = 1;
  f.u(0, 0) = 2.0;
  f.u(4, 0) = -2.0;
  const FlowField inv = forward_splat_flow(f);
  ASSERT_TRUE(inv.valid(2, 0));
  EXPECT_DOUBLE_EQ(inv.weight(2, 0), 2.0);
  EXPECT_DOUBLE_EQ(inv.u(2, 0), 0.0);
}

TEST(ForwardSplat, ApproximatesInverseOfSmoothField) {
  const int W = 64, H = 48;
  FlowField f(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      f.u(x, y) = 2.0 + 1.5 * std::sin(x / 9.0) + 0.3 * y / H;
      f.v(x, y) = -1.0 + std::cos(y / 7.0 + x / 20.0);
    }
  }
  const FlowField inv = forward_splat_flow(f);
  std::vector<double> epe;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!inv.valid(x, y)) continue;
      // True inverse at q: solve p + f(p) = q by fixed-point iteration.
      Eigen::Vector2d p(x, y);
      for (int it = 0; it < 50; ++it) {
        double u = 0, v = 0;
        if (!sample_bilinear(f.u, p.x(), p.y(), &u) || !sample_bilinear(f.v, p.x(), p.y(), &v)) break;
        p = Eigen::Vector2d(x - u, y - v);
      }
      epe.push_back((Eigen::Vector2d(x + inv.u(x, y), y + inv.v(x, y)) - p).norm());
    }
  }
  ASSERT_GT(epe.size(), 1000u);
  std::nth_element(epe.begin(), epe.begin() + epe.size() / 2, epe.end());
  EXPECT_LT(epe[epe.size() / 2], 0.25);
}

TEST(ObjectFlow, Cases) {
  const FlowField cam_flow = uniform_flow(8, 6, 1.5, -0.5);
  const FlowField zero = object_flow(cam_flow, cam_flow);
  for (std::size_t i = 0; i < zero.u.size(); ++i) EXPECT_EQ(zero.u[i], 0.0);

  FlowField total = uniform_flow(8, 6, 3.5, -0.5);
  FlowField cam2 = cam_flow;
  cam2.valid(2, 2) = 0;
  const FlowField obj = object_flow(total, cam2);
  EXPECT_FALSE(obj.valid(2, 2));
  EXPECT_DOUBLE_EQ(obj.u(3, 3), 2.0);
}

TEST(BidirectionalMask, Cases) {
  const FlowField ab = uniform_flow(20, 10, 2, 1);
  const FlowField ba = uniform_flow(20, 10, -2, -1);
  const Mask m = bidirectional_mask(ab, ba);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 18; ++x) EXPECT_TRUE(m(x, y));
  }
  const Mask z = bidirectional_mask(FlowField(20, 10), FlowField(20, 10));
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_TRUE(z[i]);

  FlowField occluded = ba;
  for (int y = 0; y < 10; ++y) {
    for (int x = 8; x < 11; ++x) occluded.u(x, y) = 8.0;
  }
  const Mask o = bidirectional_mask(ab, occluded, 1.0);
  for (int y = 0; y < 9; ++y) {
    EXPECT_FALSE(o(7, y));
    EXPECT_FALSE(o(8, y));
    EXPECT_TRUE(o(2, y));
  }
}

TEST(CompensateNeighbor, Cases) {
  Image img(10, 8, 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = 0.01 * i;
  Mask src(10, 8, 1);
  src(4, 4) = 0;
  const CompensatedView same = compensate_neighbor(img, FlowField(10, 8), src);
  EXPECT_EQ(same.mask, src);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (!src(x, y)) continue;
      for (int c = 0; c < 3; ++c) EXPECT_EQ(same.image(x, y, c), img(x, y, c));
    }
  }

  const FlowField off = uniform_flow(10, 8, 3.0, 0.0);
  const CompensatedView shifted = compensate_neighbor(img, off, src);
  for (int y = 0; y < 8; ++y) {
    for (int x = 7; x < 10; ++x) EXPECT_FALSE(shifted.mask(x, y));
  }
  EXPECT_FALSE(shifted.mask(1, 4));
  EXPECT_DOUBLE_EQ(shifted.image(2, 2, 1), img(5, 2, 1));

  // Output validity never exceeds what the source allows.
  FlowField frac = uniform_flow(10, 8, 0.5, 0.25);
  const CompensatedView f = compensate_neighbor(img, frac, src);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (!f.mask(x, y)) continue;
      for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) EXPECT_TRUE(src(x + dx, y + dy));
      }
    }
  }
}

TEST(FlowDecomposition, StaticSceneHasNoObjectMotion) {
  const VideoBundle b = generate(default_scene_spec(64, 48, 4, 2));
  double sum = 0.0;
  long n = 0;
  for (const auto& [key, total] : b.flows) {
    const FlowField obj = object_flow(total, b.camera_flows.at(key));
    for (std::size_t i = 0; i < obj.u.size(); ++i) {
      if (!obj.valid[i]) continue;
      sum += std::hypot(obj.u[i], obj.v[i]);
      ++n;
    }
  }
  ASSERT_GT(n, 0);
  EXPECT_LT(sum / n, 0.05);
}
