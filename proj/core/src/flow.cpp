#include "splatstab/flow.hpp"

#include <cmath>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

struct SplatBuffer {
  ScalarField u, v, w;
  SplatBuffer(int width, int height) : u(width, height, 0.0), v(width, height, 0.0), w(width, height, 0.0) {}

  void deposit(double x, double y, double du, double dv) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i) {
        const double wt = wx[i] * wy[j];
        if (wt == 0.0 || !u.contains(x0 + i, y0 + j)) continue;
        u(x0 + i, y0 + j) += wt * du;
        v(x0 + i, y0 + j) += wt * dv;
        w(x0 + i, y0 + j) += wt;
      }
    }
  }
};

bool finite_flow(const FlowField& f, int x, int y) {
  return f.valid(x, y) && std::isfinite(f.u(x, y)) && std::isfinite(f.v(x, y));
}

}  // namespace

FlowField camera_flow(const DepthMap& depth_k, const Pose& P_k, const Pose& P_i, const CameraIntrinsics& K) {
  const PointGrid points = unproject(depth_k, K, P_k);
  FlowField out(K.width, K.height);
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      out.valid(x, y) = 0;
      if (!points.valid(x, y)) continue;
      const Projection pr = project(points.points(x, y), K, P_i);
      if (!pr.valid) continue;
      out.u(x, y) = pr.pixel.x() - x;
      out.v(x, y) = pr.pixel.y() - y;
      out.valid(x, y) = 1;
    }
  }
  return out;
}

FlowField forward_splat_flow(const FlowField& flow, double min_weight) {
  const int W = flow.width();
  const int H = flow.height();
  SplatBuffer acc(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!finite_flow(flow, x, y)) continue;
      acc.deposit(x + flow.u(x, y), y + flow.v(x, y), -flow.u(x, y), -flow.v(x, y));
    }
  }
  FlowField out(W, H);
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    const double w = acc.w[i];
    out.weight[i] = w;
    out.valid[i] = w >= min_weight && w > 0.0;
    out.u[i] = out.valid[i] ? acc.u[i] / w : 0.0;
    out.v[i] = out.valid[i] ? acc.v[i] / w : 0.0;
  }
  return out;
}

FlowField object_flow(const FlowField& total, const FlowField& camera) {
  if (!total.same_shape(camera)) throw InputError("object_flow: shape mismatch");
  FlowField out(total.width(), total.height());
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.valid[i] = total.valid[i] && camera.valid[i];
    out.u[i] = out.valid[i] ? total.u[i] - camera.u[i] : 0.0;
    out.v[i] = out.valid[i] ? total.v[i] - camera.v[i] : 0.0;
  }
  return out;
}

Mask bidirectional_mask(const FlowField& f_ab, const FlowField& f_ba, double abs_tol, double rel_tol) {
  if (!f_ab.same_shape(f_ba)) throw InputError("bidirectional_mask: shape mismatch");
  Mask out(f_ab.width(), f_ab.height(), 0);
  for (int y = 0; y < f_ab.height(); ++y) {
    for (int x = 0; x < f_ab.width(); ++x) {
      if (!finite_flow(f_ab, x, y)) continue;
      const double u = f_ab.u(x, y);
      const double v = f_ab.v(x, y);
      double bu = 0.0;
      double bv = 0.0;
      if (!sample_bilinear(f_ba.u, x + u, y + v, &bu, &f_ba.valid)) continue;
      sample_bilinear(f_ba.v, x + u, y + v, &bv, &f_ba.valid);
      const double err = std::hypot(u + bu, v + bv);
      out(x, y) = err <= abs_tol + rel_tol * std::hypot(u, v);
    }
  }
  return out;
}

FlowField invert_object_flow(const FlowField& object_flow_i_to_k, double motion_threshold, double min_weight) {
  const FlowField& f = object_flow_i_to_k;
  const int W = f.width();
  const int H = f.height();
  SplatBuffer moving(W, H);
  SplatBuffer still(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (!finite_flow(f, x, y)) continue;
      const double u = f.u(x, y);
      const double v = f.v(x, y);
      SplatBuffer& target = std::hypot(u, v) >= motion_threshold ? moving : still;
      target.deposit(x + u, y + v, -u, -v);
    }
  }
  FlowField out(W, H);
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    const SplatBuffer& src = moving.w[i] >= min_weight ? moving : still;
    const double w = src.w[i];
    out.weight[i] = w;
    out.valid[i] = w >= min_weight && w > 0.0;
    out.u[i] = out.valid[i] ? src.u[i] / w : 0.0;
    out.v[i] = out.valid[i] ? src.v[i] / w : 0.0;
  }
  return out;
}

CompensatedView compensate_neighbor(const Image& I_i, const FlowField& sampling, const Mask& source_mask) {
  if (!I_i.same_extent(sampling.u) || !I_i.same_extent(source_mask)) {
    throw InputError("compensate_neighbor: shape mismatch");
  }
  CompensatedView out{I_i, Mask(I_i.width(), I_i.height(), 0)};
  double px[8];
  for (int y = 0; y < I_i.height(); ++y) {
    for (int x = 0; x < I_i.width(); ++x) {
      if (!sampling.valid(x, y)) continue;
      if (!sample_bilinear(I_i, x + sampling.u(x, y), y + sampling.v(x, y), px, &source_mask)) continue;
      for (int c = 0; c < I_i.channels(); ++c) out.image(x, y, c) = px[c];
      out.mask(x, y) = 1;
    }
  }
  return out;
}

CompensatedView supervision_view(const Image& I_i, const FlowField& total_i_to_k, const FlowField* total_k_to_i,
                                 const DepthMap& depth_k, const Pose& P_k, const Pose& P_i,
                                 const CameraIntrinsics& K, const CompensationConfig& config) {
  const FlowField cam_k_to_i = camera_flow(depth_k, P_k, P_i, K);
  const FlowField cam_i_to_k = forward_splat_flow(cam_k_to_i, config.splat_min_weight);

  Mask source_mask = cam_i_to_k.valid;
  if (total_k_to_i != nullptr) {
    const Mask consistent = bidirectional_mask(total_i_to_k, *total_k_to_i, config.abs_tol, config.rel_tol);
    for (std::size_t i = 0; i < source_mask.size(); ++i) source_mask[i] = source_mask[i] && consistent[i];
  }

  if (!config.enabled) return {I_i, source_mask};

  const FlowField obj = object_flow(total_i_to_k, cam_i_to_k);
  const FlowField sampling = invert_object_flow(obj, config.motion_threshold, config.splat_min_weight);
  return compensate_neighbor(I_i, sampling, source_mask);
}

}  // namespace splatstab
