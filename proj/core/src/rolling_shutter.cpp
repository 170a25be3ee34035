#include "splatstab/rolling_shutter.hpp"

#include <algorithm>
#include <cmath>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

// Displacements below this are treated as exactly zero so identity logs give an
// identity resample.
constexpr double kSnap = 1e-9;

template <typename Sample>
std::size_t upper_index(const std::vector<Sample>& samples, double t) {
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double value, const Sample& s) { return value < s.t; });
  return static_cast<std::size_t>(it - samples.begin());
}

void rasterize_triangle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                        const Eigen::Vector2d& da, const Eigen::Vector2d& db, const Eigen::Vector2d& dc,
                        FlowField& field) {
  const double area = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  if (std::abs(area) < 1e-12) return;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}))));
  const int x1 = std::min(field.width() - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}))));
  const int y1 = std::min(field.height() - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
  const double eps = 1e-9;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (field.valid(x, y)) continue;
      const double la = ((b.x() - x) * (c.y() - y) - (c.x() - x) * (b.y() - y)) / area;
      const double lb = ((c.x() - x) * (a.y() - y) - (a.x() - x) * (c.y() - y)) / area;
      const double lc = 1.0 - la - lb;
      if (la < -eps || lb < -eps || lc < -eps) continue;
      const Eigen::Vector2d d = la * da + lb * db + lc * dc;
      field.u(x, y) = d.x();
      field.v(x, y) = d.y();
      field.valid(x, y) = 1;
    }
  }
}

}  // namespace

void GyroLog::validate() const {
  if (samples.empty()) throw InputError("gyro log is empty");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) throw InputError("gyro timestamps must be strictly increasing");
  }
}

void OisLog::validate() const {
  if (samples.empty()) throw InputError("OIS log is empty");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) throw InputError("OIS timestamps must be strictly increasing");
  }
}

OisLog OisLog::zero(double t0, double t1) {
  OisLog log;
  log.samples.push_back({t0, Eigen::Vector2d::Zero()});
  if (t1 > t0) log.samples.push_back({t1, Eigen::Vector2d::Zero()});
  return log;
}

Lookup<Eigen::Quaterniond> interpolate_rotation(const GyroLog& log, double t) {
  if (log.samples.empty()) throw InputError("gyro log is empty");
  const auto& s = log.samples;
  if (t <= s.front().t) return {s.front().rotation.normalized(), t < s.front().t};
  if (t >= s.back().t) return {s.back().rotation.normalized(), t > s.back().t};
  const std::size_t hi = upper_index(s, t);
  const std::size_t lo = hi - 1;
  if (t == s[lo].t) return {s[lo].rotation.normalized(), false};
  const double a = (t - s[lo].t) / (s[hi].t - s[lo].t);
  // Eigen's slerp already takes the shorter arc.
  return {s[lo].rotation.normalized().slerp(a, s[hi].rotation.normalized()).normalized(), false};
}

Lookup<Eigen::Vector2d> interpolate_ois(const OisLog& log, double t) {
  if (log.samples.empty()) throw InputError("OIS log is empty");
  const auto& s = log.samples;
  if (t <= s.front().t) return {s.front().offset, t < s.front().t};
  if (t >= s.back().t) return {s.back().offset, t > s.back().t};
  const std::size_t hi = upper_index(s, t);
  const std::size_t lo = hi - 1;
  const double a = (t - s[lo].t) / (s[hi].t - s[lo].t);
  return {(1.0 - a) * s[lo].offset + a * s[hi].offset, false};
}

Eigen::Quaterniond mean_rotation(const GyroLog& log, double t0, double t1) {
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  const Eigen::Quaterniond* reference = nullptr;
  int count = 0;
  for (const auto& s : log.samples) {
    if (s.t < t0 || s.t > t1) continue;
    if (reference == nullptr) reference = &s.rotation;
    Eigen::Vector4d c = s.rotation.normalized().coeffs();
    if (s.rotation.dot(*reference) < 0.0) c = -c;
    acc += c;
    ++count;
  }
  if (count == 0) throw InputError("no gyro samples in the averaging window");
  Eigen::Quaterniond q;
  q.coeffs() = acc / count;
  return q.normalized();
}

Grid<Eigen::Vector2d> mesh_grid(int width, int height, int block_size) {
  if (block_size < 1) throw InputError("block size must be positive");
  const int cols = (width - 1 + block_size - 1) / block_size + 1;
  const int rows = (height - 1 + block_size - 1) / block_size + 1;
  Grid<Eigen::Vector2d> grid(cols, rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      grid(c, r) = Eigen::Vector2d(c * block_size, r * block_size);
    }
  }
  return grid;
}

FlowField dense_warp_from_grid(const WarpGrid& grid, int out_width, int out_height) {
  if (!grid.src.same_shape(grid.dst)) throw InputError("warp grid shape mismatch");
  FlowField field(out_width, out_height);
  std::fill(field.valid.data().begin(), field.valid.data().end(), std::uint8_t{0});
  std::fill(field.weight.data().begin(), field.weight.data().end(), 0.0);

  Grid<Eigen::Vector2d> disp(grid.src.width(), grid.src.height());
  for (std::size_t i = 0; i < disp.size(); ++i) {
    Eigen::Vector2d d = grid.src[i] - grid.dst[i];
    if (std::abs(d.x()) < kSnap) d.x() = 0.0;
    if (std::abs(d.y()) < kSnap) d.y() = 0.0;
    disp[i] = d;
  }

  for (int r = 0; r + 1 < grid.dst.height(); ++r) {
    for (int c = 0; c + 1 < grid.dst.width(); ++c) {
      const auto& p00 = grid.dst(c, r);
      const auto& p10 = grid.dst(c + 1, r);
      const auto& p01 = grid.dst(c, r + 1);
      const auto& p11 = grid.dst(c + 1, r + 1);
      rasterize_triangle(p00, p10, p11, disp(c, r), disp(c + 1, r), disp(c + 1, r + 1), field);
      rasterize_triangle(p00, p11, p01, disp(c, r), disp(c + 1, r + 1), disp(c, r + 1), field);
    }
  }
  for (std::size_t i = 0; i < field.valid.size(); ++i) field.weight[i] = field.valid[i] ? 1.0 : 0.0;
  return field;
}

SampledImage grid_sample(const Image& image, const FlowField& field) {
  if (image.width() != field.width() || image.height() != field.height()) {
    throw InputError("grid_sample: shape mismatch");
  }
  SampledImage out{Image(image.width(), image.height(), image.channels()), Mask(image.width(), image.height(), 0)};
  double px[8];
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!field.valid(x, y)) continue;
      if (!sample_bilinear(image, x + field.u(x, y), y + field.v(x, y), px)) continue;
      for (int c = 0; c < image.channels(); ++c) out.image(x, y, c) = px[c];
      out.valid(x, y) = 1;
    }
  }
  return out;
}

RollingShutterResult rs_remove_frame(const Image& frame, const CameraIntrinsics& K, const GyroLog& gyro,
                                     const OisLog& ois, const RollingShutterConfig& config) {
  gyro.validate();
  ois.validate();
  if (frame.width() != K.width || frame.height() != K.height) throw InputError("frame/intrinsics shape mismatch");
  if (config.block_size < 1) throw InputError("block size must be positive");

  const ReadoutModel readout{config.frame_start, config.readout_duration, frame.height()};
  RollingShutterResult out;
  const double t_end = readout.row_time(frame.height());
  const bool has_samples = std::any_of(gyro.samples.begin(), gyro.samples.end(), [&](const GyroSample& g) {
    return g.t >= config.frame_start && g.t <= t_end;
  });
  // Sparse logs may not sample inside a short readout; fall back to the mid-readout orientation.
  out.dst_rotation = has_samples ? mean_rotation(gyro, config.frame_start, t_end)
                                 : interpolate_rotation(gyro, 0.5 * (config.frame_start + t_end)).value;

  out.grid.block_size = config.block_size;
  out.grid.src = mesh_grid(frame.width(), frame.height(), config.block_size);
  out.grid.dst = out.grid.src;

  for (int r = 0; r < out.grid.src.height(); ++r) {
    const double row = r * config.block_size;
    const double t = readout.row_time(row);
    const Eigen::Quaterniond src_rotation = interpolate_rotation(gyro, t).value;
    CameraIntrinsics src_K = K;
    const Eigen::Vector2d shift = interpolate_ois(ois, t).value;
    src_K.cx += shift.x();
    src_K.cy += shift.y();
    const Eigen::Matrix3d H = rotation_homography(K, out.dst_rotation, src_rotation, src_K);
    if (!H.allFinite() || std::abs(H.determinant()) < 1e-12) {
      throw NumericalError("degenerate homography for row block " + std::to_string(r));
    }
    for (int c = 0; c < out.grid.src.width(); ++c) {
      const Eigen::Vector3d q = H * out.grid.src(c, r).homogeneous();
      if (!(q.z() > 0.0)) throw NumericalError("row block " + std::to_string(r) + " maps behind the camera");
      out.grid.dst(c, r) = q.hnormalized();
    }
  }

  out.field = dense_warp_from_grid(out.grid, frame.width(), frame.height());
  SampledImage sampled = grid_sample(frame, out.field);
  out.image = std::move(sampled.image);
  out.valid = std::move(sampled.valid);
  return out;
}

}  // namespace splatstab
