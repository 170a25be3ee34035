#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradient_suite.hpp"
#include "oracles.hpp"
#include "splatstab/error.hpp"
#include "splatstab/losses.hpp"
#include "splatstab/ssim.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;
using namespace splatstab::testing;

namespace {

GaussianScene grid_scene(int w, int h, std::uint64_t seed) {
  const CameraIntrinsics K{20, 20, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  DepthMap d(w, h);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    d.values[i] = 3 + u(rng);
    d.valid[i] = 1;
  }
  GaussianScene s = build_scene(random_image(w, h, 3, seed), d, K, Pose::identity());
  for (auto& g : s.primitives) {
    g.offset = 0.1 * Eigen::Vector3d(u(rng), u(rng), u(rng));
    g.scale += 0.2 * Eigen::Vector3d(u(rng), u(rng), u(rng));
    g.rot += 0.2 * Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng));
    g.alpha_logit += u(rng);
  }
  return s;
}

FlowField uniform_flow(int w, int h, double u, double v) {
  FlowField f(w, h);
  for (double& x : f.u.data()) x = u;
  for (double& x : f.v.data()) x = v;
  return f;
}

}  // namespace

TEST(Ssim, IdenticalImages) {
  const Image a = random_image(20, 16, 3, 1);
  const SsimResult r = ssim(a, a, nullptr, true);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  for (double g : r.gradient.data()) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(Ssim, ConstantBlackVersusWhite) {
  const SsimSettings s;
  EXPECT_NEAR(ssim(Image(16, 16, 3, 0.0), Image(16, 16, 3, 1.0)).value, s.c1 / (1.0 + s.c1), 1e-12);
}

TEST(Ssim, ContrastScaledConstants) {
  const SsimSettings s;
  const double c = 0.6;
  const double expected = (c * c + s.c1) / (1.25 * c * c + s.c1);
  EXPECT_NEAR(ssim(Image(16, 16, 3, c), Image(16, 16, 3, 0.5 * c)).value, expected, 1e-12);
}

TEST(Ssim, MapAgreesWithMean) {
  const Image a = random_image(18, 14, 3, 2);
  const Image b = random_image(18, 14, 3, 3);
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const ScalarField m = ssim_map(a, b, c);
    for (double v : m.data()) sum += v;
  }
  EXPECT_NEAR(ssim(a, b).value, sum / (3.0 * 18 * 14), 1e-12);
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradientCheck c = ssim_gradient(seed);
    EXPECT_LT(c.max_relative_error, 1e-3) << c.worst;
  }
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(Image(4, 4, 3), Image(5, 4, 3)), InputError);
  const Mask empty(4, 4, 0);
  EXPECT_THROW(ssim(Image(4, 4, 3), Image(4, 4, 3), &empty), InputError);
}

TEST(Photometric, ZeroWhenEqualAndGradients) {
  const Image a = random_image(12, 10, 3, 4);
  EXPECT_NEAR(photometric_loss(a, a, Mask(12, 10, 1), 0.2).value, 0.0, 1e-12);
  const GradientCheck c = photometric_gradient(5);
  EXPECT_LT(c.max_relative_error, 1e-3) << c.worst;
  // Plain L1 part by hand.
  const Image b(12, 10, 3, 0.25);
  EXPECT_NEAR(photometric_loss(Image(12, 10, 3, 0.5), b, Mask(12, 10, 1), 0.0).value, 0.25, 1e-12);
  EXPECT_THROW(photometric_loss(a, a, Mask(12, 10, 0), 0.2), InputError);
}

TEST(LossRgb, ZeroWhenTargetsAreRenders) {
  const CameraIntrinsics K = small_camera(20, 16, 20.0);
  const GaussianScene s = random_scene(5, 3, K, Pose::identity());
  std::vector<ViewTarget> views;
  for (int v = 0; v < 3; ++v) {
    const Pose p = Pose::from_translation({0.05 * v, 0, 0});
    views.push_back({v, p, render(s, K, p).color, Mask(20, 16, 1)});
  }
  views.push_back({3, Pose::identity(), Image(20, 16, 3), Mask(20, 16, 0)});
  EXPECT_NEAR(loss_rgb(s, K, views, 0.2, {}, nullptr), 0.0, 1e-12);
  views.resize(1);
  views[0].mask = Mask(20, 16, 0);
  EXPECT_THROW(loss_rgb(s, K, views, 0.2, {}, nullptr), InputError);
}

TEST(LossRgb, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradientCheck c = rgb_gradient(seed);
    EXPECT_LT(c.max_relative_error, 1e-3) << c.worst;
  }
}

TEST(LossRgb, ExactDepthBeatsPerturbedDepth) {
  // A wide baseline turns the depth error into pixel misregistration well above
  // the sub-pixel blur of the per-pixel initialization.
  SceneSpec spec = default_scene_spec(64, 64, 5, 4);
  spec.planes.clear();
  PlaneSpec plane;
  plane.point = {0, 0, 3};
  plane.texture = {TextureKind::kValueNoise, 0.5, 11, 1};
  spec.planes.push_back(plane);
  spec.trajectory.velocity = {20.0, 0, 0};
  const VideoBundle b = generate(spec);
  const int k = 2;
  const GaussianScene exact = build_scene(b.frames[k], b.depths[k], b.intrinsics, b.poses[k]);
  DepthMap noisy = b.depths[k];
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.05);
  for (double& v : noisy.values.data()) v *= 1.0 + n(rng);
  const GaussianScene perturbed = build_scene(b.frames[k], noisy, b.intrinsics, b.poses[k]);
  std::vector<ViewTarget> views;
  for (int i : {2, 0, 1, 3, 4}) views.push_back(make_view_target(b, k, i, {}));
  EXPECT_LT(loss_rgb(exact, b.intrinsics, views, 0.2, {}, nullptr),
            loss_rgb(perturbed, b.intrinsics, views, 0.2, {}, nullptr));
  for (int v = 1; v < 5; ++v) {
    EXPECT_LT(loss_rgb(exact, b.intrinsics, {views[v]}, 0.2, {}, nullptr),
              loss_rgb(perturbed, b.intrinsics, {views[v]}, 0.2, {}, nullptr))
        << "view " << views[v].frame;
  }
}

TEST(LossRgb, CompensationHelpsOnDynamicScene) {
  const VideoBundle b = generate(dynamic_scene_spec(64, 48, 5, 8));
  const int k = 2;
  const GaussianScene exact = build_scene(b.frames[k], b.depths[k], b.intrinsics, b.poses[k]);
  CompensationConfig off;
  off.enabled = false;
  std::vector<ViewTarget> with, without;
  for (int i : {0, 1, 3, 4}) {
    with.push_back(make_view_target(b, k, i, {}));
    without.push_back(make_view_target(b, k, i, off));
  }
  EXPECT_LT(loss_rgb(exact, b.intrinsics, with, 0.2, {}, nullptr),
            loss_rgb(exact, b.intrinsics, without, 0.2, {}, nullptr));
}

TEST(PairRegularizer, TrivialCases) {
  const GaussianScene s = grid_scene(9, 7, 1);
  const PairResult same = pair_regularizer(s, s, FlowField(9, 7), Mask(9, 7, 1));
  EXPECT_NEAR(same.value, 0.0, 1e-15);
  EXPECT_EQ(same.matched, 63);

  const GaussianScene t = grid_scene(9, 7, 2);
  const PairResult none = pair_regularizer(s, t, FlowField(9, 7), Mask(9, 7, 0));
  EXPECT_EQ(none.value, 0.0);
  EXPECT_EQ(none.matched, 0);
  for (const auto& g : none.grad_i) EXPECT_EQ(g.scale, Eigen::Vector3d::Zero());
  for (const auto& g : none.grad_j) EXPECT_EQ(g.color, Eigen::Vector3d::Zero());
}

TEST(PairRegularizer, ShiftedSceneMatches) {
  const GaussianScene si = grid_scene(9, 7, 3);
  GaussianScene sj = si;
  for (int y = 0; y < 7; ++y) {
    for (int x = 1; x < 9; ++x) {
      const int dst = sj.primitive_at(0, x, y);
      const int src = si.primitive_at(0, x - 1, y);
      const Eigen::Vector3d anchor = sj.primitives[dst].anchor;
      sj.primitives[dst] = si.primitives[src];
      sj.primitives[dst].anchor = anchor;
      sj.anchor_depth[dst] = si.anchor_depth[src];
    }
  }
  const PairResult r = pair_regularizer(si, sj, uniform_flow(9, 7, 1.0, 0.0), Mask(9, 7, 1));
  EXPECT_EQ(r.matched, 8 * 7);
  EXPECT_NEAR(r.value, 0.0, 1e-20);
  const PairResult raw = pair_regularizer(si, sj, uniform_flow(9, 7, 1.0, 0.0), Mask(9, 7, 1), PairMode::kRawMean);
  EXPECT_GT(raw.value, 0.0);
}

TEST(PairRegularizer, SymmetricUnderConsistentFlows) {
  const GaussianScene si = grid_scene(10, 8, 4);
  const GaussianScene sj = grid_scene(10, 8, 5);
  for (PairMode mode : {PairMode::kNormalizedOffset, PairMode::kRawMean}) {
    const PairResult ij = pair_regularizer(si, sj, uniform_flow(10, 8, 2.0, -1.0), Mask(10, 8, 1), mode);
    const PairResult ji = pair_regularizer(sj, si, uniform_flow(10, 8, -2.0, 1.0), Mask(10, 8, 1), mode);
    EXPECT_EQ(ij.matched, ji.matched);
    EXPECT_NEAR(ij.value, ji.value, 1e-6);
  }
}

TEST(PairRegularizer, RotationSignIsIgnored) {
  const GaussianScene si = grid_scene(6, 5, 6);
  GaussianScene sj = si;
  for (auto& g : sj.primitives) g.rot = -g.rot;
  EXPECT_NEAR(pair_regularizer(si, sj, FlowField(6, 5), Mask(6, 5, 1)).value, 0.0, 1e-20);
}

TEST(PairRegularizer, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (bool raw : {false, true}) {
      const GradientCheck c = pair_gradient(seed, raw);
      EXPECT_LT(c.max_relative_error, 1e-3) << c.worst;
    }
  }
}

TEST(PairRegularizer, ShapeMismatch) {
  EXPECT_THROW(pair_regularizer(grid_scene(6, 5, 1), grid_scene(7, 5, 1), FlowField(6, 5), Mask(6, 5, 1)), InputError);
}

TEST(Dilation, PairPartners) {
  EXPECT_EQ(pair_partners(10, 0, 5, 40), (std::vector<int>{8, 9, 11, 12}));
  EXPECT_EQ(pair_partners(10, 2, 5, 40), (std::vector<int>{4, 7, 13, 16}));
  EXPECT_EQ(pair_partners(10, 4, 5, 40), (std::vector<int>{0, 5, 15, 20}));
  EXPECT_EQ(pair_partners(1, 0, 5, 40), (std::vector<int>{0, 2, 3}));
  EXPECT_EQ(pair_partners(3, 4, 5, 5), (std::vector<int>{}));
  EXPECT_EQ(pair_partners(3, 0, 1, 10), (std::vector<int>{}));
}

TEST(Dilation, CumulativeReach) {
  EXPECT_EQ(cumulative_reach(3, {0, 2, 8}), (std::vector<int>{3, 9, 27}));
  EXPECT_EQ(geometric_schedule(3, 3), (std::vector<int>{0, 2, 8}));
  EXPECT_EQ(cumulative_reach(5, {0, 2, 4}), (std::vector<int>{5, 17, 37}));
}

TEST(Thresholds, Constants) {
  EXPECT_DOUBLE_EQ(scale_threshold(640, 10), 4480.0);
  EXPECT_DOUBLE_EQ(depth_threshold(5.0), 1.0);
  EXPECT_DOUBLE_EQ(depth_threshold(10.0), 2.0);
}

TEST(LossScale, Cases) {
  GaussianScene s = grid_scene(4, 3, 7);
  for (auto& g : s.primitives) g.scale.setConstant(-5.0);
  EXPECT_EQ(loss_scale(s, 640, nullptr), 0.0);
  const double tau = scale_threshold(640, s.anchor_depth[3]);
  s.primitives[3].scale[1] = std::log(2.0 * tau);
  SceneGradient g;
  EXPECT_NEAR(loss_scale(s, 640, &g), 2.0 * tau, 1e-9 * tau);
  EXPECT_NEAR(g[3].scale[1], 2.0 * tau, 1e-9 * tau);
  EXPECT_EQ(g[3].scale[0], 0.0);
  const GradientCheck c = scale_gradient(3);
  EXPECT_LT(c.max_relative_error, 1e-3) << c.worst;
}

TEST(LossOffset, ThresholdFixtures) {
  DepthMap prior = DepthMap::uniform(4, 4, 5.0);
  ScalarField rendered(4, 4, 5.0);
  EXPECT_EQ(offset_term(rendered, prior, nullptr).value, 0.0);
  rendered(1, 2) = 7.0;
  const DepthLoss one = offset_term(rendered, prior, nullptr);
  EXPECT_DOUBLE_EQ(one.value, 2.0);
  EXPECT_EQ(one.count, 1);
  EXPECT_DOUBLE_EQ(one.gradient(1, 2), 1.0);
  rendered(1, 2) = 5.5;
  EXPECT_EQ(offset_term(rendered, prior, nullptr).value, 0.0);
  rendered(0, 0) = 2.0;
  Mask fg(4, 4, 1);
  fg(0, 0) = 0;
  EXPECT_EQ(offset_term(rendered, prior, &fg).value, 0.0);
  EXPECT_DOUBLE_EQ(offset_term(rendered, prior, nullptr).value, 3.0);
}

TEST(LossOffset, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradientCheck c = offset_gradient(seed);
    EXPECT_LT(c.max_relative_error, 1e-3) << c.worst;
  }
}

TEST(LossBreakdown, Combine) {
  LossBreakdown b{1.0, 2.0, 3.0, 4.0, 0.0};
  b.combine({0.2, 0.1, 0.01, 0.1});
  EXPECT_DOUBLE_EQ(b.total, 1.0 + 0.2 + 0.03 + 0.4);
}
