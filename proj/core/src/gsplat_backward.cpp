#include "splatstab/gsplat.hpp"

#include <algorithm>
#include <cmath>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

struct ScreenGradient {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d conic = Eigen::Matrix2d::Zero();
  double depth = 0.0;
  double opacity = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  bool touched = false;
};

struct Contribution {
  int index;
  double T;
  double alpha;
  double kernel;
  double q;
  Eigen::Vector2d d;
  const TileSplat* splat;
};

}  // namespace

PrimitiveGradient& PrimitiveGradient::operator+=(const PrimitiveGradient& o) {
  mu += o.mu;
  offset += o.offset;
  scale += o.scale;
  rot += o.rot;
  alpha_logit += o.alpha_logit;
  color += o.color;
  return *this;
}

PrimitiveGradient PrimitiveGradient::operator*(double s) const {
  PrimitiveGradient r = *this;
  r.mu *= s;
  r.offset *= s;
  r.scale *= s;
  r.rot *= s;
  r.alpha_logit *= s;
  r.color *= s;
  return r;
}

void render_backward(const GaussianScene& scene, const RenderState& state, const RenderUpstream& upstream,
                     SceneGradient& gradient) {
  const std::size_t n = scene.primitives.size();
  if (state.projected.size() != n) throw InputError("render state does not match scene");
  if (gradient.empty()) gradient.resize(n);
  if (gradient.size() != n) throw InputError("gradient size does not match scene");
  const CameraIntrinsics& K = state.K;
  const RenderSettings& settings = state.settings;
  if (upstream.color != nullptr && (upstream.color->width() != K.width || upstream.color->height() != K.height ||
                                    upstream.color->channels() != 3)) {
    throw InputError("shape mismatch");
  }
  for (const ScalarField* f : {upstream.depth, upstream.alpha}) {
    if (f != nullptr && (f->width() != K.width || f->height() != K.height)) throw InputError("shape mismatch");
  }

  std::vector<ScreenGradient> screen(n);
  std::vector<Contribution> list;
  const int ts = std::max(1, settings.tile_size);
  const FootprintKernel kernel(settings.cutoff_sigma);

  for (int ty = 0; ty < state.tiles_y; ++ty) {
    for (int tx = 0; tx < state.tiles_x; ++tx) {
      const auto& tile = state.tiles[ty * state.tiles_x + tx];
      const int y_end = std::min(K.height, (ty + 1) * ts);
      const int x_end = std::min(K.width, (tx + 1) * ts);
      for (int y = ty * ts; y < y_end; ++y) {
        for (int x = tx * ts; x < x_end; ++x) {
          list.clear();
          double T = 1.0;
          double a_acc = 0.0;
          double z_acc = 0.0;
          for (const TileSplat& p : tile) {
            if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
            const Eigen::Vector2d d(x - p.mx, y - p.my);
            const double q = p.ca * d.x() * d.x() + 2.0 * p.cb * d.x() * d.y() + p.cc * d.y() * d.y();
            const double g = kernel.value(q);
            if (g <= 0.0) continue;
            const double a = p.opacity * g;
            list.push_back({p.index, T, a, g, q, d, &p});
            a_acc += T * a;
            z_acc += T * a * p.z;
            T *= 1.0 - a;
            if (T < settings.min_transmittance) break;
          }
          if (list.empty()) continue;

          Eigen::Vector3d g_color = Eigen::Vector3d::Zero();
          if (upstream.color != nullptr) {
            for (int c = 0; c < 3; ++c) g_color[c] = (*upstream.color)(x, y, c);
          }
          double g_z = 0.0;  // w.r.t. the unnormalized Σ w z
          double g_a = upstream.alpha != nullptr ? (*upstream.alpha)(x, y) : 0.0;
          if (upstream.depth != nullptr && a_acc > 0.0) {
            const double gd = (*upstream.depth)(x, y);
            g_z = gd / a_acc;
            g_a -= gd * (z_acc / a_acc) / a_acc;
          }

          double R = 0.0;
          for (auto it = list.rbegin(); it != list.rend(); ++it) {
            const TileSplat& p = *it->splat;
            const double s = g_color.dot(p.color) + g_z * p.z + g_a;
            const double w = it->T * it->alpha;
            ScreenGradient& sg = screen[it->index];
            sg.touched = true;
            sg.color += w * g_color;
            sg.depth += w * g_z;
            const double da = it->T * (s - R);
            R = it->alpha * s + (1.0 - it->alpha) * R;
            sg.opacity += da * it->kernel;
            const double dq = da * p.opacity * kernel.derivative(it->q);
            const Eigen::Vector2d conic_d(p.ca * it->d.x() + p.cb * it->d.y(), p.cb * it->d.x() + p.cc * it->d.y());
            sg.mean += -2.0 * dq * conic_d;
            sg.conic += dq * it->d * it->d.transpose();
          }
        }
      }
    }
  }

  const Eigen::Matrix3d world_to_camera = state.view.rotation.normalized().toRotationMatrix().transpose();
  for (std::size_t j = 0; j < n; ++j) {
    const ScreenGradient& sg = screen[j];
    if (!sg.touched) continue;
    const ProjectedPrimitive& p = state.projected[j];
    const GaussianPrimitive& prim = scene.primitives[j];
    PrimitiveGradient out;
    out.color = sg.color;
    out.alpha_logit = sg.opacity * p.opacity * (1.0 - p.opacity);

    const Eigen::Matrix2d g_cov2d = -p.conic * sg.conic * p.conic;
    const Eigen::Matrix2d g_sym = 0.5 * (g_cov2d + g_cov2d.transpose());
    const Eigen::Matrix3d g_cov_cam = p.jacobian.transpose() * g_sym * p.jacobian;
    const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g_sym * p.jacobian * p.cov_camera;

    Eigen::Vector3d g_cam = p.jacobian.transpose() * sg.mean;
    g_cam.z() += sg.depth;
    const double x = p.camera.x(), y = p.camera.y(), z = p.camera.z();
    const double z2 = z * z, z3 = z2 * z;
    g_cam.x() += g_jac(0, 2) * (-K.fx / z2);
    g_cam.y() += g_jac(1, 2) * (-K.fy / z2);
    g_cam.z() += g_jac(0, 0) * (-K.fx / z2) + g_jac(0, 2) * (2.0 * K.fx * x / z3) + g_jac(1, 1) * (-K.fy / z2) +
                 g_jac(1, 2) * (2.0 * K.fy * y / z3);

    const Eigen::Matrix3d g_cov_world = world_to_camera.transpose() * g_cov_cam * world_to_camera;
    const Eigen::Matrix3d M = p.rotation * p.stddev.asDiagonal();
    const Eigen::Matrix3d g_M = 2.0 * g_cov_world * M;
    const Eigen::Matrix3d g_R = g_M * p.stddev.asDiagonal();
    const Eigen::Matrix3d RtgM = p.rotation.transpose() * g_M;
    for (int i = 0; i < 3; ++i) out.scale[i] = RtgM(i, i) * p.stddev[i];
    out.rot = quaternion_matrix_backward(prim.rot, g_R);

    out.mu = world_to_camera.transpose() * g_cam;
    out.offset = out.mu;
    gradient[j] += out;
  }
}

SceneGradient render_backward(const GaussianScene& scene, const RenderState& state, const RenderUpstream& upstream) {
  SceneGradient gradient(scene.primitives.size());
  render_backward(scene, state, upstream, gradient);
  return gradient;
}

}  // namespace splatstab
