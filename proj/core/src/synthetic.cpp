#include "splatstab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::uint64_t seed, long long ix, long long iy, int channel) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(ix));
  h = mix(h ^ static_cast<std::uint64_t>(iy));
  h = mix(h ^ static_cast<std::uint64_t>(channel));
  return 0.1 + 0.8 * (static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53));
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

Eigen::Vector3d texture(const TextureSpec& tex, double u, double v) {
  if (tex.kind == TextureKind::kChecker) {
    const long long a = static_cast<long long>(std::floor(u / tex.cell));
    const long long b = static_cast<long long>(std::floor(v / tex.cell));
    const int parity = static_cast<int>((a + b) & 1LL);
    return {lattice(tex.seed, parity, 0, 0), lattice(tex.seed, parity, 0, 1), lattice(tex.seed, parity, 0, 2)};
  }
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double amp = 1.0, norm = 0.0, cell = tex.cell;
  for (int o = 0; o < std::max(1, tex.octaves); ++o) {
    const double x = u / cell, y = v / cell;
    const long long ix = static_cast<long long>(std::floor(x));
    const long long iy = static_cast<long long>(std::floor(y));
    const double fx = smoothstep(x - ix), fy = smoothstep(y - iy);
    const std::uint64_t s = tex.seed * 131 + o;
    for (int c = 0; c < 3; ++c) {
      const double v00 = lattice(s, ix, iy, c), v10 = lattice(s, ix + 1, iy, c);
      const double v01 = lattice(s, ix, iy + 1, c), v11 = lattice(s, ix + 1, iy + 1, c);
      acc[c] += amp * ((1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11));
    }
    norm += amp;
    amp *= 0.5;
    cell *= 0.5;
  }
  return acc / norm;
}

void plane_basis(const Eigen::Vector3d& normal, const Eigen::Vector3d& u_axis, Eigen::Vector3d& n, Eigen::Vector3d& u,
                 Eigen::Vector3d& v) {
  n = normal.normalized();
  u = (u_axis - n * n.dot(u_axis)).normalized();
  v = n.cross(u);
}

bool hit_plane(const Eigen::Vector3d& p0, const Eigen::Vector3d& normal, const Eigen::Vector3d& u_axis, double half_u,
               double half_v, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double& s, double& tu, double& tv) {
  Eigen::Vector3d n, u, v;
  plane_basis(normal, u_axis, n, u, v);
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-12) return false;
  s = n.dot(p0 - o) / denom;
  if (!(s > 1e-9)) return false;
  const Eigen::Vector3d rel = o + s * d - p0;
  tu = rel.dot(u);
  tv = rel.dot(v);
  if (half_u > 0.0 && std::abs(tu) > half_u) return false;
  if (half_v > 0.0 && std::abs(tv) > half_v) return false;
  return true;
}

bool hit_object(const ObjectSpec& obj, const Eigen::Vector3d& c, const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                double& s, double& tu, double& tv) {
  if (obj.kind == ObjectKind::kSquare) {
    return hit_plane(c, Eigen::Vector3d(0, 0, -1), Eigen::Vector3d::UnitX(), obj.size, obj.size, o, d, s, tu, tv);
  }
  const double ox = o.x() - c.x(), oz = o.z() - c.z();
  const double a = d.x() * d.x() + d.z() * d.z();
  if (a < 1e-15) return false;
  const double b = 2.0 * (ox * d.x() + oz * d.z());
  const double cc = ox * ox + oz * oz - obj.size * obj.size;
  const double disc = b * b - 4 * a * cc;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  for (double root : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
    if (!(root > 1e-9)) continue;
    const Eigen::Vector3d X = o + root * d;
    if (std::abs(X.y() - c.y()) > obj.half_height) continue;
    s = root;
    tu = obj.size * std::atan2(X.x() - c.x(), -(X.z() - c.z()));
    tv = X.y() - c.y();
    return true;
  }
  return false;
}

bool inside_object(const ObjectSpec& obj, const Eigen::Vector3d& c, const Eigen::Vector3d& p) {
  if (obj.kind == ObjectKind::kSquare) return false;
  const double r2 = (p.x() - c.x()) * (p.x() - c.x()) + (p.z() - c.z()) * (p.z() - c.z());
  return r2 <= obj.size * obj.size && std::abs(p.y() - c.y()) <= obj.half_height;
}

Eigen::Vector3d object_center(const ObjectSpec& obj, double t) { return obj.center + obj.velocity * t; }

void render_rows(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& pose, double t, int y0, int y1,
                 RenderedFrame& out) {
  const Eigen::Matrix3d R = pose.rotation.normalized().toRotationMatrix();
  for (int y = y0; y < y1; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d dc((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d d = (R * dc).normalized();
      const RayHit hit = cast_ray(spec, pose.translation, d, t);
      if (!hit.hit) continue;
      for (int c = 0; c < 3; ++c) out.image(x, y, c) = hit.color[c];
      out.depth.values(x, y) = pose.to_camera(hit.point).z();
      out.depth.valid(x, y) = 1;
      out.dynamic(x, y) = hit.dynamic ? 1 : 0;
      out.points(x, y) = hit.point;
    }
  }
}

RenderedFrame empty_frame(const CameraIntrinsics& K) {
  return {Image(K.width, K.height, 3, 0.0), DepthMap(K.width, K.height), Mask(K.width, K.height, 0),
          Grid<Eigen::Vector3d>(K.width, K.height, Eigen::Vector3d::Zero())};
}

}  // namespace

void SceneSpec::validate() const {
  camera.validate();
  if (frames < 2) throw InputError("scene needs at least 2 frames");
  if (!(frame_rate > 0.0)) throw InputError("frame rate must be positive");
  if (flow_window < 0 || sparse_points < 0 || gyro_rate_factor < 1) throw InputError("invalid sampling settings");
  if (planes.empty() && !object) throw InputError("scene has no geometry");
  for (const PlaneSpec& p : planes) {
    if (p.normal.norm() < 1e-12) throw InputError("plane normal must be non-zero");
    if (p.u_axis.cross(p.normal).norm() < 1e-9 * p.u_axis.norm() * p.normal.norm()) {
      throw InputError("plane texture axis must not be parallel to its normal");
    }
    if (!(p.texture.cell > 0.0) || p.half_u < 0 || p.half_v < 0) throw InputError("invalid plane texture or extent");
  }
  if (object) {
    if (!(object->size > 0.0) || !(object->half_height > 0.0) || !(object->texture.cell > 0.0)) {
      throw InputError("invalid object size");
    }
  }
  if (trajectory.jitter_translation < 0 || trajectory.jitter_rotation_deg < 0 || trajectory.jitter_lowpass_sigma < 0) {
    throw InputError("jitter must be non-negative");
  }
}

SceneSpec default_scene_spec(int width, int height, int frames, std::uint64_t seed) {
  SceneSpec spec;
  spec.camera = {static_cast<double>(width), static_cast<double>(width), (width - 1) / 2.0, (height - 1) / 2.0,
                 width, height};
  spec.frames = frames;
  PlaneSpec backdrop;
  backdrop.texture = {TextureKind::kValueNoise, 0.35, seed * 17 + 1, 3};
  PlaneSpec floor;
  floor.point = {0, 1.2, 0};
  floor.normal = {0, -1, 0};
  floor.texture = {TextureKind::kValueNoise, 0.2, seed * 17 + 2, 2};
  PlaneSpec panel;
  panel.point = {-0.6, -0.2, 4.5};
  panel.normal = Eigen::Vector3d(0.3, 0, -1).normalized();
  panel.half_u = 0.8;
  panel.half_v = 0.7;
  panel.texture = {TextureKind::kValueNoise, 0.12, seed * 17 + 3, 2};
  spec.planes = {backdrop, floor, panel};
  spec.trajectory.seed = seed;
  return spec;
}

SceneSpec dynamic_scene_spec(int width, int height, int frames, std::uint64_t seed) {
  SceneSpec spec = default_scene_spec(width, height, frames, seed);
  ObjectSpec obj;
  obj.kind = ObjectKind::kSquare;
  obj.center = {0.35, 0.1, 3.0};
  obj.velocity = {-2.0, 0, 0};
  obj.size = 0.4;
  obj.texture = {TextureKind::kChecker, 0.1, seed * 17 + 4, 1};
  spec.object = obj;
  return spec;
}

RayHit cast_ray(const SceneSpec& spec, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double t) {
  RayHit best;
  double s = 0, tu = 0, tv = 0;
  for (const PlaneSpec& p : spec.planes) {
    if (!hit_plane(p.point, p.normal, p.u_axis, p.half_u, p.half_v, o, d, s, tu, tv)) continue;
    if (best.hit && s >= best.distance) continue;
    best.hit = true;
    best.dynamic = false;
    best.distance = s;
    best.color = texture(p.texture, tu, tv);
  }
  if (spec.object) {
    const Eigen::Vector3d c = object_center(*spec.object, t);
    if (hit_object(*spec.object, c, o, d, s, tu, tv) && (!best.hit || s < best.distance)) {
      best.hit = true;
      best.dynamic = true;
      best.distance = s;
      best.color = texture(spec.object->texture, tu, tv);
    }
  }
  if (best.hit) best.point = o + best.distance * d;
  return best;
}

RenderedFrame render_synthetic(const SceneSpec& spec, const CameraIntrinsics& K, const Pose& pose, double t) {
  RenderedFrame out = empty_frame(K);
  render_rows(spec, K, pose, t, 0, K.height, out);
  return out;
}

Trajectory smooth_path(const SceneSpec& spec) {
  Trajectory out;
  for (int k = 0; k < spec.frames; ++k) {
    const double t = k / spec.frame_rate;
    Pose p;
    p.translation = spec.trajectory.start + spec.trajectory.velocity * t;
    p.rotation = Eigen::Quaterniond(
        Eigen::AngleAxisd(spec.trajectory.yaw_rate_deg * t * M_PI / 180.0, Eigen::Vector3d::UnitY()));
    out.push_back(p);
  }
  return out;
}

Trajectory shaky_path(const SceneSpec& spec) {
  Trajectory out = smooth_path(spec);
  const TrajectorySpec& tr = spec.trajectory;
  if (tr.jitter_translation == 0.0 && tr.jitter_rotation_deg == 0.0) return out;
  const int T = spec.frames;
  std::mt19937_64 rng(tr.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::Matrix<double, 6, 1>> noise(T);
  for (auto& n : noise)
    for (int c = 0; c < 6; ++c) n[c] = normal(rng);
  if (tr.jitter_lowpass_sigma > 0.0) {
    const int r = static_cast<int>(std::ceil(3 * tr.jitter_lowpass_sigma));
    std::vector<Eigen::Matrix<double, 6, 1>> filtered(T);
    for (int k = 0; k < T; ++k) {
      Eigen::Matrix<double, 6, 1> acc = Eigen::Matrix<double, 6, 1>::Zero();
      double wsum = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int i = std::clamp(k + j, 0, T - 1);
        const double w = std::exp(-0.5 * j * j / (tr.jitter_lowpass_sigma * tr.jitter_lowpass_sigma));
        acc += w * noise[i];
        wsum += w;
      }
      filtered[k] = acc / wsum;
    }
    noise = filtered;
  }
  for (int k = 0; k < T; ++k) {
    const Eigen::Vector3d dt = tr.jitter_translation * noise[k].head<3>();
    const Eigen::Vector3d dr = tr.jitter_rotation_deg * M_PI / 180.0 * noise[k].tail<3>();
    out[k].translation += dt;
    if (dr.norm() > 0.0) {
      out[k].rotation = (out[k].rotation * Eigen::Quaterniond(Eigen::AngleAxisd(dr.norm(), dr.normalized())))
                            .normalized();
    }
  }
  return out;
}

VideoBundle generate(const SceneSpec& spec) {
  spec.validate();
  VideoBundle b;
  const CameraIntrinsics& K = spec.camera;
  const int T = spec.frames;
  b.intrinsics = K;
  b.frame_rate = spec.frame_rate;
  b.poses_smooth = smooth_path(spec);
  b.poses = shaky_path(spec);

  std::vector<Grid<Eigen::Vector3d>> points;
  std::vector<Mask> dynamic;
  for (int k = 0; k < T; ++k) {
    const double t = k / spec.frame_rate;
    if (spec.object && inside_object(*spec.object, object_center(*spec.object, t), b.poses[k].translation)) {
      throw InputError("camera is inside the object at frame " + std::to_string(k));
    }
    RenderedFrame f = render_synthetic(spec, K, b.poses[k], t);
    b.frames.push_back(std::move(f.image));
    b.depths.push_back(std::move(f.depth));
    dynamic.push_back(f.dynamic);
    points.push_back(std::move(f.points));
  }
  b.dynamic_masks = dynamic;

  const Eigen::Vector3d velocity = spec.object ? spec.object->velocity : Eigen::Vector3d::Zero();
  for (int a = 0; a < T; ++a) {
    for (int c = std::max(0, a - spec.flow_window); c <= std::min(T - 1, a + spec.flow_window); ++c) {
      if (a == c) continue;
      FlowField total(K.width, K.height), cam(K.width, K.height);
      const double dt = (c - a) / spec.frame_rate;
      for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
          if (!b.depths[a].valid(x, y)) {
            total.valid(x, y) = cam.valid(x, y) = 0;
            continue;
          }
          const Eigen::Vector3d X = points[a](x, y);
          const Projection pc = project(X, K, b.poses[c]);
          cam.valid(x, y) = pc.valid ? 1 : 0;
          if (pc.valid) {
            cam.u(x, y) = pc.pixel.x() - x;
            cam.v(x, y) = pc.pixel.y() - y;
          }
          if (!dynamic[a](x, y)) {
            total.u(x, y) = cam.u(x, y);
            total.v(x, y) = cam.v(x, y);
            total.valid(x, y) = cam.valid(x, y);
            continue;
          }
          const Projection pt = project(X + velocity * dt, K, b.poses[c]);
          total.valid(x, y) = pt.valid ? 1 : 0;
          if (pt.valid) {
            total.u(x, y) = pt.pixel.x() - x;
            total.v(x, y) = pt.pixel.y() - y;
          }
        }
      }
      b.flows.emplace(FramePair{a, c}, std::move(total));
      b.camera_flows.emplace(FramePair{a, c}, std::move(cam));
    }
  }

  GyroLog gyro;
  const int factor = spec.gyro_rate_factor;
  for (int j = 0; j <= factor * (T - 1); ++j) {
    const int k = std::min(j / factor, T - 2);
    const double f = static_cast<double>(j - k * factor) / factor;
    GyroSample s;
    s.t = j / (spec.frame_rate * factor);
    s.rotation = b.poses[k].rotation.slerp(f, b.poses[k + 1].rotation).normalized();
    gyro.samples.push_back(s);
  }
  b.gyro = gyro;

  if (spec.sparse_points > 0) {
    SparsePointSet sp;
    std::mt19937_64 rng(mix(spec.trajectory.seed ^ 0x5eedULL));
    std::uniform_int_distribution<int> pick_frame(0, T - 1), pick_x(0, K.width - 1), pick_y(0, K.height - 1);
    for (int attempt = 0; attempt < 20 * spec.sparse_points && static_cast<int>(sp.points.size()) < spec.sparse_points;
         ++attempt) {
      const int f = pick_frame(rng), x = pick_x(rng), y = pick_y(rng);
      if (!b.depths[f].valid(x, y) || dynamic[f](x, y)) continue;
      const Eigen::Vector3d X = points[f](x, y);
      const int id = static_cast<int>(sp.points.size());
      int seen = 0;
      for (int g = 0; g < T; ++g) {
        const Projection p = project(X, K, b.poses[g]);
        if (!p.valid || p.pixel.x() < 0 || p.pixel.y() < 0 || p.pixel.x() > K.width - 1 ||
            p.pixel.y() > K.height - 1) {
          continue;
        }
        const Eigen::Vector3d o = b.poses[g].translation;
        const double dist = (X - o).norm();
        const RayHit hit = cast_ray(spec, o, (X - o) / dist, g / spec.frame_rate);
        if (!hit.hit || hit.dynamic || std::abs(hit.distance - dist) > 1e-6 * dist) continue;
        sp.visibility[g].push_back(id);
        ++seen;
      }
      if (seen == 0) continue;
      sp.points.push_back(X);
    }
    b.points = std::move(sp);
  }
  b.validate();
  return b;
}

std::vector<SparseObservation> sparse_observations(const VideoBundle& bundle) {
  std::vector<SparseObservation> out;
  if (!bundle.points) return out;
  for (const auto& [frame, ids] : bundle.points->visibility) {
    for (int id : ids) {
      const Projection p = project(bundle.points->points[id], bundle.intrinsics, bundle.poses[frame]);
      if (p.valid) out.push_back({id, frame, p.pixel});
    }
  }
  return out;
}

Eigen::Quaterniond readout_rotation(const Pose& frame_pose, double yaw_ramp_deg, double fraction) {
  const Eigen::Quaterniond yaw(Eigen::AngleAxisd(yaw_ramp_deg * fraction * M_PI / 180.0, Eigen::Vector3d::UnitY()));
  return (frame_pose.rotation * yaw).normalized();
}

RollingShutterCapture rs_warp(const SceneSpec& spec, const VideoBundle& bundle, const RollingShutterSpec& rs) {
  spec.validate();
  if (!(rs.readout_duration > 0.0) || rs.readout_duration >= 1.0 / spec.frame_rate) {
    throw InputError("readout duration must be positive and shorter than the frame interval");
  }
  if (rs.gyro_samples < 2) throw InputError("need at least 2 gyro samples per readout");
  const CameraIntrinsics& K = bundle.intrinsics;
  const int H = K.height;
  RollingShutterCapture cap;
  for (int k = 0; k < bundle.frame_count(); ++k) {
    const double t0 = k / spec.frame_rate;
    RenderedFrame f = empty_frame(K);
    for (int y = 0; y < H; ++y) {
      const Pose row_pose{readout_rotation(bundle.poses[k], rs.yaw_ramp_deg, static_cast<double>(y) / H),
                          bundle.poses[k].translation};
      render_rows(spec, K, row_pose, t0, y, y + 1, f);
    }
    cap.frames.push_back(std::move(f.image));
    for (int j = 0; j < rs.gyro_samples; ++j) {
      const double frac = static_cast<double>(j) / (rs.gyro_samples - 1);
      cap.gyro.samples.push_back({t0 + frac * rs.readout_duration,
                                  readout_rotation(bundle.poses[k], rs.yaw_ramp_deg, frac)});
    }
    RollingShutterConfig cfg;
    cfg.block_size = rs.block_size;
    cfg.frame_start = t0;
    cfg.readout_duration = rs.readout_duration;
    cap.readouts.push_back(cfg);
  }
  const double t_end = (bundle.frame_count() - 1) / spec.frame_rate + rs.readout_duration;
  cap.ois = OisLog::zero(0.0, t_end);
  return cap;
}

}  // namespace splatstab
