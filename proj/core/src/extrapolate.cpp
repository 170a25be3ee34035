#include "splatstab/extrapolate.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "splatstab/error.hpp"
#include "splatstab/flow.hpp"

namespace splatstab {
namespace {

FlowField pad_flow(const FlowField& flow, const DepthMap& padded_depth, const Pose& from, const Pose& to,
                   const CameraIntrinsics& K, int pad) {
  FlowField out = camera_flow(padded_depth, from, to, K);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      out.u(x + pad, y + pad) = flow.u(x, y);
      out.v(x + pad, y + pad) = flow.v(x, y);
      out.valid(x + pad, y + pad) = flow.valid(x, y);
      out.weight(x + pad, y + pad) = flow.weight(x, y);
    }
  }
  return out;
}

// Multi-source breadth-first fill: each empty pixel copies the filled pixel
// its search front came from.
void replicate_nearest(Image& image, DepthMap& depth, Mask& fill, const Mask& filled) {
  const int w = image.width(), h = image.height();
  Grid<int> source(w, h, -1);
  std::deque<int> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (filled(x, y)) {
        source(x, y) = static_cast<int>(source.index(x, y));
        queue.push_back(source(x, y));
      }
    }
  }
  if (queue.empty()) return;
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    const int x = i % w, y = i / w;
    for (int n = 0; n < 4; ++n) {
      const int nx = x + dx[n], ny = y + dy[n];
      if (!source.contains(nx, ny) || source(nx, ny) >= 0) continue;
      source(nx, ny) = source(x, y);
      queue.push_back(static_cast<int>(source.index(nx, ny)));
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (filled(x, y)) continue;
      const int s = source(x, y);
      const int sx = s % w, sy = s / w;
      for (int c = 0; c < image.channels(); ++c) image(x, y, c) = image(sx, sy, c);
      depth.values(x, y) = depth.values(sx, sy);
      depth.valid(x, y) = depth.valid(sx, sy);
      fill(x, y) = kFillReplicated;
    }
  }
}

}  // namespace

PaddedBundle extrapolate_frames(const VideoBundle& bundle, int pad, int window) {
  if (pad < 0) throw InputError("pad must be non-negative");
  bundle.validate();
  PaddedBundle out;
  out.pad = pad;
  if (pad == 0) {
    out.bundle = bundle;
    for (const Image& f : bundle.frames) out.fill.emplace_back(f.width(), f.height(), kFillOriginal);
    return out;
  }

  const CameraIntrinsics& K = bundle.intrinsics;
  const CameraIntrinsics Kp = K.padded(pad);
  const int W = Kp.width, H = Kp.height;
  const int T = bundle.frame_count();
  VideoBundle& pb = out.bundle;
  pb.intrinsics = Kp;
  pb.frame_rate = bundle.frame_rate;
  pb.poses = bundle.poses;
  pb.poses_smooth = bundle.poses_smooth;
  pb.gyro = bundle.gyro;
  pb.points = bundle.points;

  for (int k = 0; k < T; ++k) {
    const Image& src = bundle.frames[k];
    Image image(W, H, src.channels(), 0.0);
    DepthMap depth(W, H);
    Mask fill(W, H, kFillPropagated);
    Mask filled(W, H, 0);
    Grid<int> owner_dt(W, H, std::numeric_limits<int>::max());
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        for (int c = 0; c < src.channels(); ++c) image(x + pad, y + pad, c) = src(x, y, c);
        depth.values(x + pad, y + pad) = bundle.depths[k].values(x, y);
        depth.valid(x + pad, y + pad) = bundle.depths[k].valid(x, y);
        fill(x + pad, y + pad) = kFillOriginal;
        filled(x + pad, y + pad) = 1;
        owner_dt(x + pad, y + pad) = 0;
      }
    }

    for (int i = std::max(0, k - window); i <= std::min(T - 1, k + window); ++i) {
      if (i == k) continue;
      const int dt = std::abs(i - k);
      const DepthMap& di = bundle.depths[i];
      const Image& fi = bundle.frames[i];
      for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
          if (!di.valid(x, y)) continue;
          const Eigen::Vector3d world = unproject_pixel(x, y, di.values(x, y), K, bundle.poses[i]);
          const Projection p = project(world, Kp, bundle.poses[k]);
          if (!p.valid) continue;
          const int u = static_cast<int>(std::lround(p.pixel.x()));
          const int v = static_cast<int>(std::lround(p.pixel.y()));
          if (!fill.contains(u, v) || fill(u, v) == kFillOriginal) continue;
          if (dt > owner_dt(u, v)) continue;
          if (dt == owner_dt(u, v) && !(p.depth < depth.values(u, v))) continue;
          owner_dt(u, v) = dt;
          for (int c = 0; c < fi.channels(); ++c) image(u, v, c) = fi(x, y, c);
          depth.values(u, v) = p.depth;
          depth.valid(u, v) = 1;
          filled(u, v) = 1;
        }
      }
    }
    replicate_nearest(image, depth, fill, filled);
    pb.frames.push_back(std::move(image));
    pb.depths.push_back(std::move(depth));
    out.fill.push_back(std::move(fill));
  }

  if (bundle.has_dynamic_masks()) {
    for (const Mask& m : bundle.dynamic_masks) {
      Mask pm(W, H, 0);
      for (int y = 0; y < K.height; ++y)
        for (int x = 0; x < K.width; ++x) pm(x + pad, y + pad) = m(x, y);
      pb.dynamic_masks.push_back(std::move(pm));
    }
  }
  for (const auto& [key, flow] : bundle.flows) {
    pb.flows.emplace(key, pad_flow(flow, pb.depths[key.first], pb.poses[key.first], pb.poses[key.second], Kp, pad));
  }
  for (const auto& [key, flow] : bundle.camera_flows) {
    pb.camera_flows.emplace(key,
                            pad_flow(flow, pb.depths[key.first], pb.poses[key.first], pb.poses[key.second], Kp, pad));
  }
  return out;
}

}  // namespace splatstab
