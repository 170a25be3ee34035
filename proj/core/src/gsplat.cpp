#include "splatstab/gsplat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

ProjectedPrimitive project_primitive(const GaussianPrimitive& g, const Eigen::Matrix3d& world_to_camera,
                                     const Eigen::Vector3d& camera_center, const CameraIntrinsics& K,
                                     const RenderSettings& settings) {
  ProjectedPrimitive p;
  p.camera = world_to_camera * (g.mu() - camera_center);
  const double x = p.camera.x();
  const double y = p.camera.y();
  const double z = p.camera.z();
  if (!(z > settings.near_plane)) return p;

  p.rotation = quaternion_to_matrix(g.rot);
  p.stddev = g.scale.array().exp();
  const Eigen::Matrix3d M = p.rotation * p.stddev.asDiagonal();
  const Eigen::Matrix3d cov_world = M * M.transpose();
  p.cov_camera = world_to_camera * cov_world * world_to_camera.transpose();

  p.jacobian << K.fx / z, 0.0, -K.fx * x / (z * z), 0.0, K.fy / z, -K.fy * y / (z * z);
  p.cov2d = p.jacobian * p.cov_camera * p.jacobian.transpose();
  p.cov2d(0, 0) += settings.covariance_floor;
  p.cov2d(1, 1) += settings.covariance_floor;
  const double det = p.cov2d.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) return p;
  p.conic << p.cov2d(1, 1) / det, -p.cov2d(0, 1) / det, -p.cov2d(1, 0) / det, p.cov2d(0, 0) / det;
  p.mean = {K.fx * x / z + K.cx, K.fy * y / z + K.cy};
  p.opacity = g.opacity();

  // Tight axis-aligned bounds of the ellipse q <= cutoff².
  const double c2 = settings.cutoff_sigma * settings.cutoff_sigma;
  const double rx = std::sqrt(c2 * p.cov2d(0, 0));
  const double ry = std::sqrt(c2 * p.cov2d(1, 1));
  p.x0 = std::max(0, static_cast<int>(std::ceil(p.mean.x() - rx)));
  p.x1 = std::min(K.width - 1, static_cast<int>(std::floor(p.mean.x() + rx)));
  p.y0 = std::max(0, static_cast<int>(std::ceil(p.mean.y() - ry)));
  p.y1 = std::min(K.height - 1, static_cast<int>(std::floor(p.mean.y() + ry)));
  p.visible = p.x0 <= p.x1 && p.y0 <= p.y1 && std::isfinite(p.mean.x()) && std::isfinite(p.mean.y());
  return p;
}

}  // namespace

double GaussianPrimitive::opacity() const { return sigmoid(alpha_logit); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

int GaussianScene::primitive_at(int layer_index, int x, int y) const {
  if (layer_index < 0 || layer_index >= layers || x < 0 || y < 0 || x >= width || y >= height) return -1;
  return index_grid[(static_cast<std::size_t>(layer_index) * height + y) * width + x];
}

void GaussianScene::reindex() {
  index_grid.assign(static_cast<std::size_t>(layers) * width * height, -1);
  for (std::size_t j = 0; j < primitives.size(); ++j) {
    if (pixel[j] < 0) continue;
    index_grid[static_cast<std::size_t>(layer[j]) * width * height + pixel[j]] = static_cast<int>(j);
  }
}

GaussianScene build_scene(const Image& image, const DepthMap& depth, const CameraIntrinsics& K, const Pose& pose,
                          const SceneInit& init) {
  if (image.width() != K.width || image.height() != K.height || depth.width() != K.width ||
      depth.height() != K.height) {
    throw InputError("shape mismatch");
  }
  if (init.layers < 1 || init.layers > 2) throw InputError("layers must be 1 or 2");
  if (!(init.alpha > 0.0 && init.alpha < 1.0)) throw InputError("initial alpha must be in (0, 1)");

  GaussianScene scene;
  scene.width = K.width;
  scene.height = K.height;
  scene.layers = init.layers;
  scene.anchor_depths = depth;
  const double alpha_logit = logit(init.alpha);
  for (int l = 0; l < init.layers; ++l) {
    const double factor = l == 0 ? 1.0 : init.layer_depth_factor;
    for (int y = 0; y < K.height; ++y) {
      for (int x = 0; x < K.width; ++x) {
        const double d = depth.values(x, y);
        if (!depth.valid(x, y) || !std::isfinite(d) || !(d > 0.0)) continue;
        const double dl = d * factor;
        GaussianPrimitive g;
        g.anchor = unproject_pixel(x, y, dl, K, pose);
        g.scale = Eigen::Vector3d::Constant(std::log(init.scale_pixels * dl / K.fx));
        g.alpha_logit = alpha_logit;
        for (int c = 0; c < 3; ++c) g.color[c] = image(x, y, std::min(c, image.channels() - 1));
        scene.primitives.push_back(g);
        scene.pixel.push_back(y * K.width + x);
        scene.layer.push_back(l);
        scene.anchor_depth.push_back(dl);
      }
    }
  }
  if (scene.primitives.empty()) throw InputError("depth map has no valid pixels");
  scene.reindex();
  return scene;
}

double footprint_kernel(double q, const RenderSettings& settings) {
  return FootprintKernel(settings.cutoff_sigma).value(q);
}

double footprint_kernel_derivative(double q, const RenderSettings& settings) {
  return FootprintKernel(settings.cutoff_sigma).derivative(q);
}

RenderOutput render(const GaussianScene& scene, const CameraIntrinsics& K, const Pose& view,
                    const RenderSettings& settings, RenderState* state) {
  RenderState local;
  RenderState& st = state != nullptr ? *state : local;
  st.settings = settings;
  st.K = K;
  st.view = view;

  const Eigen::Matrix3d world_to_camera = view.rotation.normalized().toRotationMatrix().transpose();
  const std::size_t n = scene.primitives.size();
  st.projected.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    st.projected[j] = project_primitive(scene.primitives[j], world_to_camera, view.translation, K, settings);
  }

  std::vector<int> order;
  order.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (st.projected[j].visible) order.push_back(static_cast<int>(j));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double za = st.projected[a].camera.z();
    const double zb = st.projected[b].camera.z();
    return za < zb || (za == zb && a < b);
  });

  const int ts = std::max(1, settings.tile_size);
  st.tiles_x = (K.width + ts - 1) / ts;
  st.tiles_y = (K.height + ts - 1) / ts;
  st.tiles.assign(static_cast<std::size_t>(st.tiles_x) * st.tiles_y, {});
  for (int j : order) {
    const ProjectedPrimitive& p = st.projected[j];
    const TileSplat splat{j,          p.x0,          p.x1,          p.y0,          p.y1,
                          p.mean.x(), p.mean.y(),    p.conic(0, 0), p.conic(0, 1), p.conic(1, 1),
                          p.opacity,  p.camera.z(),  scene.primitives[j].color};
    for (int ty = p.y0 / ts; ty <= p.y1 / ts; ++ty) {
      for (int tx = p.x0 / ts; tx <= p.x1 / ts; ++tx) st.tiles[ty * st.tiles_x + tx].push_back(splat);
    }
  }

  const FootprintKernel kernel(settings.cutoff_sigma);
  RenderOutput out{Image(K.width, K.height, 3), ScalarField(K.width, K.height, 0.0),
                   ScalarField(K.width, K.height, 0.0)};
  for (int ty = 0; ty < st.tiles_y; ++ty) {
    for (int tx = 0; tx < st.tiles_x; ++tx) {
      const auto& list = st.tiles[ty * st.tiles_x + tx];
      const int y_end = std::min(K.height, (ty + 1) * ts);
      const int x_end = std::min(K.width, (tx + 1) * ts);
      for (int y = ty * ts; y < y_end; ++y) {
        for (int x = tx * ts; x < x_end; ++x) {
          double T = 1.0;
          Eigen::Vector3d c = Eigen::Vector3d::Zero();
          double z = 0.0;
          double a_acc = 0.0;
          for (const TileSplat& p : list) {
            if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
            const double dx = x - p.mx;
            const double dy = y - p.my;
            const double q = p.ca * dx * dx + 2.0 * p.cb * dx * dy + p.cc * dy * dy;
            const double g = kernel.value(q);
            if (g <= 0.0) continue;
            const double a = p.opacity * g;
            const double w = T * a;
            c += w * p.color;
            z += w * p.z;
            a_acc += w;
            T *= 1.0 - a;
            if (T < settings.min_transmittance) break;
          }
          for (int ch = 0; ch < 3; ++ch) out.color(x, y, ch) = c[ch];
          out.alpha(x, y) = a_acc;
          out.depth(x, y) = a_acc > 0.0 ? z / a_acc : 0.0;
        }
      }
    }
  }
  return out;
}

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& raw) {
  const Eigen::Vector4d q = raw.normalized();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Eigen::Vector4d quaternion_matrix_backward(const Eigen::Vector4d& raw, const Eigen::Matrix3d& G) {
  const double norm = raw.norm();
  const Eigen::Vector4d q = raw / norm;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d dw, dx, dy, dz;
  dw << 0, -z, y, z, 0, -x, -y, x, 0;
  dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  Eigen::Vector4d dq(2.0 * (G.cwiseProduct(dw)).sum(), 2.0 * (G.cwiseProduct(dx)).sum(),
                     2.0 * (G.cwiseProduct(dy)).sum(), 2.0 * (G.cwiseProduct(dz)).sum());
  // Through the normalization q = raw / |raw|.
  return (dq - q * q.dot(dq)) / norm;
}

}  // namespace splatstab
