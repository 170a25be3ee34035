#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "splatstab/bundle.hpp"
#include "splatstab/rolling_shutter.hpp"

namespace splatstab {

enum class TextureKind {
  kValueNoise,
  kChecker,
};

struct TextureSpec {
  TextureKind kind = TextureKind::kValueNoise;
  double cell = 0.25;  // meters per lattice cell
  std::uint64_t seed = 0;
  int octaves = 2;
};

struct PlaneSpec {
  Eigen::Vector3d point = Eigen::Vector3d(0, 0, 8);
  Eigen::Vector3d normal = Eigen::Vector3d(0, 0, -1);
  Eigen::Vector3d u_axis = Eigen::Vector3d::UnitX();  // in-plane texture axis
  double half_u = 0.0;  // 0 = unbounded
  double half_v = 0.0;
  TextureSpec texture;
};

enum class ObjectKind {
  kSquare,    // fronto-parallel square facing -z
  kCylinder,  // axis along world y
};

struct ObjectSpec {
  ObjectKind kind = ObjectKind::kSquare;
  Eigen::Vector3d center = Eigen::Vector3d(0, 0, 4);  // at t = 0
  Eigen::Vector3d velocity = Eigen::Vector3d(0.5, 0, 0);  // m/s
  double size = 0.5;         // half side or radius
  double half_height = 0.6;  // cylinder only
  TextureSpec texture{TextureKind::kChecker, 0.1, 7, 1};
};

struct TrajectorySpec {
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d(0.3, 0, 0);  // m/s
  double yaw_rate_deg = 0.0;                              // deg/s about the camera y axis
  double jitter_translation = 0.0;                        // meters, per-axis std-dev
  double jitter_rotation_deg = 0.0;                       // per-axis std-dev
  double jitter_lowpass_sigma = 0.0;                      // frames; 0 disables filtering
  std::uint64_t seed = 0;
};

struct SceneSpec {
  CameraIntrinsics camera{64, 64, 31.5, 31.5, 64, 64};
  int frames = 10;
  double frame_rate = 30.0;
  std::vector<PlaneSpec> planes;
  std::optional<ObjectSpec> object;
  TrajectorySpec trajectory;
  int flow_window = 10;   // total flows for every pair with |a − b| <= flow_window
  int sparse_points = 200;
  int gyro_rate_factor = 4;  // gyro samples per frame interval

  // Throws InputError for invalid geometry or settings.
  void validate() const;
};

// Backdrop at z = 8, a floor and a mid-distance panel, all value-noise textured.
SceneSpec default_scene_spec(int width, int height, int frames, std::uint64_t seed = 0);
// The default scene plus a moving square in front of the panel.
SceneSpec dynamic_scene_spec(int width, int height, int frames, std::uint64_t seed = 0);

struct RayHit {
  bool hit = false;
  bool dynamic = false;
  double distance = 0.0;  // along the unit ray
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

// Closest intersection with the scene at time t (seconds).
RayHit cast_ray(const SceneSpec& spec, const Eigen::Vector3d& origin, const Eigen::Vector3d& direction, double t);

struct RenderedFrame {
  Image image;
  DepthMap depth;
  Mask dynamic;
  Grid<Eigen::Vector3d> points;  // world hit point per pixel at time t
};

// Ray casts pixel centers of the camera at `pose` and time t.
RenderedFrame render_synthetic(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& pose, double t);

Trajectory smooth_path(const SceneSpec& spec);
Trajectory shaky_path(const SceneSpec& spec);

VideoBundle generate(const SceneSpec& spec);

// Observations of the bundle's sparse points at their visible frames.
struct SparseObservation {
  int point = 0;
  int frame = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};
std::vector<SparseObservation> sparse_observations(const VideoBundle& bundle);

struct RollingShutterSpec {
  double readout_duration = 0.02;  // seconds
  double yaw_ramp_deg = 2.0;       // yaw accumulated over one readout
  int gyro_samples = 65;           // per readout, endpoints included
  int block_size = 32;
};

struct RollingShutterCapture {
  std::vector<Image> frames;
  GyroLog gyro;
  OisLog ois;
  std::vector<RollingShutterConfig> readouts;  // per frame
};

// Orientation of frame k's camera a fraction f ∈ [0, 1] through its readout:
// R_k · yaw(ramp · f).
Eigen::Quaterniond readout_rotation(const Pose& frame_pose, double yaw_ramp_deg, double fraction);

// Re-renders every row of every frame with the orientation at its readout
// time; scene motion stays frozen at the frame time. The gyro log samples the
// same orientations inside each readout window and OIS is zero.
RollingShutterCapture rs_warp(const SceneSpec& spec, const VideoBundle& bundle, const RollingShutterSpec& rs);

}  // namespace splatstab
