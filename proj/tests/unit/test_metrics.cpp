#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "splatstab/error.hpp"
#include "splatstab/metrics.hpp"
#include "splatstab/synthetic.hpp"

using namespace splatstab;

namespace {

CorrespondenceSet warp_points(const Eigen::Matrix3d& H, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 100);
  CorrespondenceSet out;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d p(u(rng), u(rng));
    out.push_back({p, (H * p.homogeneous()).hnormalized()});
  }
  return out;
}

Track track_of(const std::vector<double>& xs, const std::vector<double>& ys) {
  Track t;
  for (std::size_t i = 0; i < xs.size(); ++i) t.points.push_back(Eigen::Vector2d(xs[i], ys[i]));
  return t;
}

}  // namespace

TEST(CroppingRatio, Cases) {
  EXPECT_DOUBLE_EQ(cropping_ratio({Mask(20, 10, 1), Mask(20, 10, 1)}), 1.0);
  Mask border(100, 100, 0);
  for (int y = 10; y < 90; ++y) {
    for (int x = 10; x < 90; ++x) border(x, y) = 1;
  }
  EXPECT_DOUBLE_EQ(cropping_ratio({border}), 0.64);
  EXPECT_DOUBLE_EQ(cropping_ratio({border, Mask(100, 100, 1)}), 0.82);
}

TEST(CroppingRatio, LargestRectangleIgnoresIslands) {
  Mask m(8, 6, 0);
  for (int y = 1; y < 4; ++y) {
    for (int x = 2; x < 7; ++x) m(x, y) = 1;
  }
  m(0, 5) = 1;
  EXPECT_EQ(largest_valid_rectangle(m), 15);
  // Translating the content keeps the ratio.
  Mask shifted(8, 6, 0);
  for (int y = 2; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) shifted(x, y) = 1;
  }
  EXPECT_EQ(largest_valid_rectangle(shifted), 15);
}

TEST(Distortion, Cases) {
  EXPECT_NEAR(distortion({warp_points(Eigen::Matrix3d::Identity(), 20, 1)}).value, 1.0, 1e-9);
  Eigen::Matrix3d aniso = Eigen::Matrix3d::Identity();
  aniso(0, 0) = 2.0;
  EXPECT_NEAR(distortion({warp_points(aniso, 20, 2)}).value, 0.5, 1e-9);
  Eigen::Matrix3d similarity = Eigen::Matrix3d::Identity();
  similarity.topLeftCorner<2, 2>() = 1.7 * Eigen::Rotation2Dd(0.4).toRotationMatrix();
  similarity(0, 2) = 12;
  EXPECT_NEAR(distortion({warp_points(similarity, 20, 3)}).value, 1.0, 1e-9);
  // Worst frame wins.
  const DistortionResult r = distortion({warp_points(similarity, 20, 4), warp_points(aniso, 20, 5), {}});
  EXPECT_NEAR(r.value, 0.5, 1e-9);
  EXPECT_EQ(r.skipped, std::vector<int>{2});
  EXPECT_TRUE(std::isnan(r.per_frame[2]));
  EXPECT_THROW(distortion({{}}), NumericalError);
}

TEST(Distortion, RelabelAndScaleInvariant) {
  Eigen::Matrix3d H;
  H << 1.2, 0.3, 4, -0.1, 0.9, 2, 1e-4, 2e-4, 1;
  CorrespondenceSet c = warp_points(H, 30, 6);
  const double d = distortion({c}).value;
  std::reverse(c.begin(), c.end());
  EXPECT_NEAR(distortion({c}).value, d, 1e-9);
  for (auto& [s, t] : c) {
    s *= 3.0;
    t *= 3.0;
  }
  EXPECT_NEAR(distortion({c}).value, d, 1e-9);
}

TEST(FitHomography, DegenerateCases) {
  EXPECT_FALSE(fit_homography(warp_points(Eigen::Matrix3d::Identity(), 3, 1)).has_value());
  CorrespondenceSet collinear;
  for (int i = 0; i < 6; ++i) collinear.push_back({Eigen::Vector2d(i, i), Eigen::Vector2d(i, i)});
  EXPECT_FALSE(fit_homography(collinear).has_value());
}

TEST(Stability, LinearTrackIsOne) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 64; ++i) {
    xs.push_back(3.0 + 0.5 * i);
    ys.push_back(-2.0 * i);
  }
  EXPECT_DOUBLE_EQ(stability({track_of(xs, ys)}), 1.0);
}

TEST(Stability, LowFrequencySinusoid) {
  const int N = 128;
  std::vector<double> s;
  for (int i = 0; i < N; ++i) s.push_back(std::sin(2 * M_PI * 3 * i / N));
  const auto v = stability_component(s);
  ASSERT_TRUE(v.has_value());
  // Detrending leaks a little energy out of the band.
  EXPECT_GT(*v, 0.98);
  EXPECT_LE(*v, 1.0);
  std::vector<double> high;
  for (int i = 0; i < N; ++i) high.push_back(std::sin(2 * M_PI * 40 * i / N));
  EXPECT_LT(*stability_component(high), 0.01);
}

TEST(Stability, WhiteNoiseExpectation) {
  const int N = 128;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  double sum = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> s;
    for (int i = 0; i < N; ++i) s.push_back(n(rng));
    sum += *stability_component(s);
  }
  EXPECT_NEAR(sum / trials, 5.0 / (N / 2 - 1), 0.01);
}

TEST(Stability, ShortSignalsAndTranslationInvariance) {
  EXPECT_FALSE(stability_component(std::vector<double>(31, 1.0)).has_value());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> xs, ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(n(rng) + 0.1 * i);
    ys.push_back(n(rng));
  }
  const double s = stability({track_of(xs, ys)});
  for (double& x : xs) x += 17.0;
  EXPECT_NEAR(stability({track_of(xs, ys)}), s, 1e-12);
  Track short_track;
  short_track.points.resize(10, Eigen::Vector2d(1, 1));
  EXPECT_THROW(stability({short_track}), InputError);
}

TEST(Stability, UsesLongestVisibleRun) {
  std::vector<double> xs, ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(i);
    ys.push_back(2 * i);
  }
  Track t = track_of(xs, ys);
  t.points[5] = std::nullopt;  // splits off a short head
  EXPECT_DOUBLE_EQ(stability({t}), 1.0);
}

TEST(GcSparse, Cases) {
  const CameraIntrinsics K{100, 100, 50, 50, 101, 101};
  const Trajectory poses = {Pose::identity(), Pose::from_translation({0.2, 0, 0})};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({u(rng), u(rng), 4 + u(rng)});
  std::vector<Observation> exact;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 50; ++i) exact.push_back({i, k, project(pts[i], K, poses[k]).pixel});
  }
  EXPECT_NEAR(gc_sparse(pts, exact, K, poses), 0.0, 1e-9);
  EXPECT_THROW(gc_sparse(pts, {}, K, poses), InputError);

  double previous = 0.0;
  for (double sigma : {0.25, 0.5, 1.0}) {
    std::normal_distribution<double> n(0.0, sigma);
    double sum = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      std::vector<Observation> noisy = exact;
      for (auto& o : noisy) o.pixel += Eigen::Vector2d(n(rng), n(rng));
      sum += gc_sparse(pts, noisy, K, poses);
    }
    const double mean = sum / trials;
    EXPECT_NEAR(mean, sigma * std::sqrt(M_PI / 2.0), 0.02 * sigma);
    EXPECT_GT(mean, previous);
    previous = mean;
  }
}

TEST(Psnr, Cases) {
  const Image a(16, 16, 3, 0.5);
  EXPECT_DOUBLE_EQ(psnr(a, a), kPsnrCap);
  const Image b(16, 16, 3, 0.5 + 1.0 / 255.0);
  EXPECT_NEAR(psnr(a, b), 48.13, 0.005);
  EXPECT_NEAR(psnr(a, b), 20 * std::log10(255.0), 1e-9);
}

TEST(GcDense, ExactScenesScoreHigh) {
  SceneSpec spec = default_scene_spec(48, 36, 17, 2);
  spec.trajectory.velocity = {0.05, 0, 0};
  const VideoBundle b = generate(spec);
  std::vector<GaussianScene> scenes;
  for (int k = 0; k < b.frame_count(); ++k) {
    scenes.push_back(build_scene(b.frames[k], b.depths[k], b.intrinsics, b.poses[k]));
  }
  const double score = gc_dense(b.frames, scenes, b.poses, b.intrinsics, {});
  EXPECT_GT(score, 18.0);
  EXPECT_LE(score, kPsnrCap);
  EXPECT_THROW(gc_dense(std::vector<Image>(b.frames.begin(), b.frames.begin() + 10),
                        std::vector<GaussianScene>(scenes.begin(), scenes.begin() + 10),
                        Trajectory(b.poses.begin(), b.poses.begin() + 10), b.intrinsics, {}),
               InputError);
}

TEST(ProjectTracks, FollowPoses) {
  const CameraIntrinsics K{100, 100, 50, 50, 101, 101};
  const Trajectory poses = {Pose::identity(), Pose::from_translation({0.1, 0, 0}),
                            Pose::from_translation({0, 0, -10})};
  const TrackSet t = project_tracks({{0, 0, 2}}, K, poses);
  ASSERT_EQ(t.size(), 1u);
  ASSERT_TRUE(t[0].points[1].has_value());
  EXPECT_NEAR(t[0].points[1]->x(), 45.0, 1e-9);
  EXPECT_TRUE(t[0].points[2].has_value());
  const TrackSet behind = project_tracks({{0, 0, -2}}, K, poses);
  EXPECT_FALSE(behind[0].points[0].has_value());
}
