#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "splatstab/error.hpp"
#include "splatstab/trajectory.hpp"

using namespace splatstab;

namespace {

Trajectory linear_path(int n, const Eigen::Vector3d& step, double yaw_step = 0.0) {
  Trajectory t;
  for (int k = 0; k < n; ++k) {
    Pose p = Pose::from_translation(step * k);
    p.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw_step * k, Eigen::Vector3d::UnitY()));
    t.push_back(p);
  }
  return t;
}

Trajectory shaky(int n, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amplitude);
  Trajectory t = linear_path(n, {0.01, 0, 0});
  for (Pose& p : t) {
    p.translation += Eigen::Vector3d(g(rng), g(rng), g(rng));
    p.rotation = (p.rotation * Eigen::Quaterniond(Eigen::AngleAxisd(g(rng), Eigen::Vector3d::UnitX()))).normalized();
  }
  return t;
}

}  // namespace

TEST(GaussianWeights, SingleSample) {
  const FrameWeights w = gaussian_weights(3, 1, 4.0, 10);
  ASSERT_EQ(w.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(w.weights[0], 1.0);
  EXPECT_EQ(w.first, 3);
}

TEST(GaussianWeights, FlatLimit) {
  const FrameWeights w = gaussian_weights(5, 5, 1e6, 10);
  ASSERT_EQ(w.weights.size(), 5u);
  for (double v : w.weights) EXPECT_NEAR(v, 0.2, 1e-6);
}

TEST(GaussianWeights, MatchesDirectEvaluation) {
  const FrameWeights w = gaussian_weights(10, 9, 4.0, 30);
  std::vector<double> ref;
  for (int i = 6; i <= 14; ++i) ref.push_back(std::exp(-0.5 * std::pow((i - 10) / 4.0, 2)));
  const double sum = std::accumulate(ref.begin(), ref.end(), 0.0);
  ASSERT_EQ(w.first, 6);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(w.weights[i], ref[i] / sum, 1e-15);
}

TEST(GaussianWeights, NormalizedEverywhereIncludingBoundaries) {
  for (BoundaryMode mode : {BoundaryMode::kClamp, BoundaryMode::kShrink}) {
    for (int k = 0; k < 12; ++k) {
      const FrameWeights w = gaussian_weights(k, 25, 4.0, 12, mode);
      EXPECT_NEAR(std::accumulate(w.weights.begin(), w.weights.end(), 0.0), 1.0, 1e-12);
      EXPECT_GE(w.first, 0);
      EXPECT_LE(w.first + static_cast<int>(w.weights.size()), 12);
    }
  }
}

TEST(GaussianWeights, EvenWindowThrows) { EXPECT_THROW(gaussian_weights(0, 4, 1.0, 10), InputError); }

TEST(SmoothingConfig, DefaultWindow) {
  SmoothingConfig c;
  c.sigma_s = 4.0;
  EXPECT_EQ(c.resolved_window(), 25);
  c.sigma_s = 0.5;
  EXPECT_EQ(c.resolved_window(), 5);
}

TEST(SmoothTrajectory, ConstantIsFixedPoint) {
  Trajectory t(20, Pose{Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ())), {1, 2, 3}});
  const Trajectory s = smooth_trajectory(t, {});
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_LE((s[k].translation - t[k].translation).norm(), 1e-12);
    EXPECT_LE(rotation_angle_between(s[k].rotation, t[k].rotation), 1e-9);
  }
}

TEST(SmoothTrajectory, LinearInteriorIsFixedPoint) {
  const Trajectory t = linear_path(60, {0.05, -0.02, 0.01}, 0.01);
  SmoothingConfig c;
  const Trajectory s = smooth_trajectory(t, c);
  const int r = c.resolved_window() / 2;
  for (int k = r; k < 60 - r; ++k) {
    EXPECT_LE((s[k].translation - t[k].translation).norm(), 1e-9);
    EXPECT_LE(rotation_angle_between(s[k].rotation, t[k].rotation), 1e-9);
  }
}

TEST(SmoothTrajectory, ShrinkModeKeepsLinearEndpoints) {
  const Trajectory t = linear_path(30, {0.05, 0, 0});
  SmoothingConfig c;
  c.boundary = BoundaryMode::kShrink;
  const Trajectory s = smooth_trajectory(t, c);
  for (int k = 0; k < 30; ++k) EXPECT_LE((s[k].translation - t[k].translation).norm(), 1e-9);
}

TEST(SmoothTrajectory, PeriodFourJitterIsAttenuated) {
  Trajectory t;
  const double a = 0.1;
  for (int k = 0; k < 80; ++k) t.push_back(Pose::from_translation({a * std::sin(2 * M_PI * k / 4.0 + 0.3), 0, 0}));
  const Trajectory s = smooth_trajectory(t, {});
  double peak = 0.0;
  for (int k = 13; k < 67; ++k) peak = std::max(peak, std::abs(s[k].translation.x()));
  EXPECT_LT(peak, 0.1 * a);
}

TEST(SmoothTrajectory, UnitWindowIsIdentity) {
  const Trajectory t = shaky(15, 1, 0.05);
  SmoothingConfig c;
  c.window = 1;
  const Trajectory s = smooth_trajectory(t, c);
  for (int k = 0; k < 15; ++k) {
    EXPECT_EQ(s[k].translation, t[k].translation);
    EXPECT_LE(rotation_angle_between(s[k].rotation, t[k].rotation), 1e-12);
  }
}

TEST(SmoothTrajectory, SecondDifferenceEnergyNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Trajectory t = shaky(50, seed, 0.03);
    const double e0 = second_difference_energy(t);
    double previous = e0;
    for (double sigma : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      for (BoundaryMode mode : {BoundaryMode::kClamp, BoundaryMode::kShrink}) {
        SmoothingConfig c;
        c.sigma_s = sigma;
        c.boundary = mode;
        EXPECT_LE(second_difference_energy(smooth_trajectory(t, c)), e0);
      }
      SmoothingConfig c;
      c.sigma_s = sigma;
      const double e = second_difference_energy(smooth_trajectory(t, c));
      EXPECT_LE(e, previous * (1 + 1e-12));
      previous = e;
    }
  }
}

TEST(SmoothTrajectory, SigmaFourRemovesMostShake) {
  const Trajectory t = shaky(60, 42, 0.03);
  SmoothingConfig c;
  c.sigma_s = 4.0;
  EXPECT_LE(second_difference_energy(smooth_trajectory(t, c)), 0.2 * second_difference_energy(t));
}

TEST(SmoothTrajectory, RotationSignsAreAligned) {
  Trajectory t = linear_path(21, {0, 0, 0}, 0.01);
  for (std::size_t k = 0; k < t.size(); k += 2) t[k].rotation.coeffs() *= -1.0;
  const Trajectory s = smooth_trajectory(t, {});
  const Trajectory ref = smooth_trajectory(linear_path(21, {0, 0, 0}, 0.01), {});
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_LE(rotation_angle_between(s[k].rotation, ref[k].rotation), 1e-9);
}

TEST(StabilizingTransforms, Cases) {
  const Trajectory src = shaky(12, 3, 0.1);
  for (const Pose& p : stabilizing_transforms(src, src)) {
    EXPECT_LE(p.translation.norm(), 1e-12);
    EXPECT_LE(rotation_angle_between(p.rotation, Eigen::Quaterniond::Identity()), 1e-9);
  }
  Trajectory dst = src;
  for (Pose& p : dst) p.translation += Eigen::Vector3d(0.5, 0, 0);
  for (const Pose& p : stabilizing_transforms(src, dst)) EXPECT_LE((p.translation - Eigen::Vector3d(0.5, 0, 0)).norm(), 1e-12);

  const Trajectory other = shaky(12, 4, 0.5);
  const auto tr = stabilizing_transforms(src, other);
  for (std::size_t k = 0; k < src.size(); ++k) {
    const Pose r = tr[k] * src[k];
    EXPECT_LE((r.translation - other[k].translation).norm(), 1e-9);
    EXPECT_LE(rotation_angle_between(r.rotation, other[k].rotation), 1e-9);
  }
}
