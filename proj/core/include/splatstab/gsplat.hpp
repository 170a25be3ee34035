#pragma once

#include <cmath>
#include <vector>

#include "splatstab/geometry.hpp"
#include "splatstab/image.hpp"

namespace splatstab {

// One 3D Gaussian. The mean is anchor + offset: the anchor is the unprojected
// depth sample the primitive was built from and never changes.
struct GaussianPrimitive {
  Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Zero();            // log of per-axis std-dev, meters
  Eigen::Vector4d rot = Eigen::Vector4d(1.0, 0.0, 0.0, 0.0);  // (w, x, y, z), normalized on use
  double alpha_logit = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // degree-0 RGB

  Eigen::Vector3d mu() const { return anchor + offset; }
  double opacity() const;
};

// Per-pixel local reconstruction of one source frame. Primitive j stems from
// pixel `pixel[j]` (row-major) of layer `layer[j]`.
struct GaussianScene {
  std::vector<GaussianPrimitive> primitives;
  int source_frame = 0;
  int width = 0;
  int height = 0;
  int layers = 1;
  std::vector<int> pixel;
  std::vector<int> layer;
  std::vector<double> anchor_depth;  // construction depth D(p) per primitive
  std::vector<int> index_grid;       // layers × height × width → primitive index or -1
  DepthMap anchor_depths;

  std::size_t size() const { return primitives.size(); }
  int primitive_at(int layer_index, int x, int y) const;
  // Rebuilds index_grid from pixel/layer.
  void reindex();
};

struct SceneInit {
  double scale_pixels = 1.0;  // isotropic std-dev as a fraction of the pixel footprint depth / fx
  double alpha = 0.8;
  int layers = 1;
  double layer_depth_factor = 1.5;  // anchor depth multiplier for the second layer
};

// One primitive per valid depth pixel (and per layer). Throws InputError on
// shape mismatch or when no depth pixel is valid.
GaussianScene build_scene(const Image& image, const DepthMap& depth, const CameraIntrinsics& K, const Pose& pose,
                          const SceneInit& init = {});

struct RenderSettings {
  double cutoff_sigma = 3.0;        // support radius in Mahalanobis units
  double covariance_floor = 0.3;    // px², added to the 2D covariance diagonal
  double min_transmittance = 1e-4;  // compositing stops below this
  double near_plane = 1e-2;         // meters
  int tile_size = 8;
};

// The 2D footprint kernel of the Mahalanobis distance q: a Gaussian exp(-q/2)
// minus its tangent at q = cutoff², rescaled to 1 at the center. Value and
// slope both reach 0 at the cutoff; beyond it the kernel is 0.
struct FootprintKernel {
  double c2 = 9.0;
  double edge = 0.0;
  double norm = 1.0;

  explicit FootprintKernel(double cutoff_sigma)
      : c2(cutoff_sigma * cutoff_sigma),
        edge(std::exp(-0.5 * c2)),
        norm(1.0 / (1.0 - edge * (1.0 + 0.5 * c2))) {}

  double value(double q) const {
    if (q > c2) return 0.0;
    return (std::exp(-0.5 * q) - edge * (1.0 - 0.5 * (q - c2))) * norm;
  }
  double derivative(double q) const {
    if (q > c2) return 0.0;
    return 0.5 * (edge - std::exp(-0.5 * q)) * norm;
  }
};

double footprint_kernel(double q, const RenderSettings& settings);
double footprint_kernel_derivative(double q, const RenderSettings& settings);

struct RenderOutput {
  Image color;        // Σ T_j a_j c_j over a black background
  ScalarField depth;  // alpha-normalized expected camera depth (0 where alpha == 0)
  ScalarField alpha;  // Σ T_j a_j
};

struct ProjectedPrimitive {
  bool visible = false;
  Eigen::Vector3d camera = Eigen::Vector3d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d conic = Eigen::Matrix2d::Identity();
  Eigen::Matrix<double, 2, 3> jacobian = Eigen::Matrix<double, 2, 3>::Zero();
  Eigen::Matrix3d cov_camera = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // from the normalized primitive quaternion
  Eigen::Vector3d stddev = Eigen::Vector3d::Ones();         // exp(scale)
  double opacity = 0.0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds of the support
};

// Compact copy of the per-pixel hot data of one projected primitive.
struct TileSplat {
  int index = 0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
  double mx = 0.0, my = 0.0;
  double ca = 0.0, cb = 0.0, cc = 0.0;  // conic [[ca, cb], [cb, cc]]
  double opacity = 0.0;
  double z = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

// Everything the backward pass needs from a forward render.
struct RenderState {
  RenderSettings settings;
  CameraIntrinsics K;
  Pose view;
  std::vector<ProjectedPrimitive> projected;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<TileSplat>> tiles;  // per tile, front to back
};

// Tile-based software rasterizer: EWA projection, global front-to-back sort by
// camera z (ties by index), per-pixel alpha compositing.
RenderOutput render(const GaussianScene& scene, const CameraIntrinsics& K, const Pose& view,
                    const RenderSettings& settings = {}, RenderState* state = nullptr);

struct PrimitiveGradient {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Zero();
  Eigen::Vector4d rot = Eigen::Vector4d::Zero();
  double alpha_logit = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();

  PrimitiveGradient& operator+=(const PrimitiveGradient& o);
  PrimitiveGradient operator*(double s) const;
};

using SceneGradient = std::vector<PrimitiveGradient>;

// Upstream gradients of the render outputs; null members are treated as zero.
struct RenderUpstream {
  const Image* color = nullptr;
  const ScalarField* depth = nullptr;
  const ScalarField* alpha = nullptr;
};

// Accumulates dL/dθ for every primitive into `gradient` (resized if empty).
void render_backward(const GaussianScene& scene, const RenderState& state, const RenderUpstream& upstream,
                     SceneGradient& gradient);
SceneGradient render_backward(const GaussianScene& scene, const RenderState& state, const RenderUpstream& upstream);

// Rotation matrix of q/|q| and its partial derivatives w.r.t. the raw 4-vector.
Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& q);
Eigen::Vector4d quaternion_matrix_backward(const Eigen::Vector4d& q, const Eigen::Matrix3d& dL_dR);

double sigmoid(double x);
double logit(double p);

}  // namespace splatstab
