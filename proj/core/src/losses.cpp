#include "splatstab/losses.hpp"

#include <array>
#include <cmath>

#include "splatstab/error.hpp"
#include "splatstab/ssim.hpp"

namespace splatstab {
namespace {

using ParamVector = Eigen::Matrix<double, kPairChannels, 1>;

std::size_t mask_count(const Mask& m) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) n += m[i] ? 1 : 0;
  return n;
}

ParamVector pair_params(const GaussianScene& scene, int j, PairMode mode, double rot_sign) {
  const GaussianPrimitive& g = scene.primitives[j];
  ParamVector v;
  v.segment<3>(0) = g.scale;
  v.segment<4>(3) = rot_sign * g.rot;
  v[7] = g.alpha_logit;
  v.segment<3>(8) = g.color;
  v.segment<3>(11) = mode == PairMode::kNormalizedOffset ? Eigen::Vector3d(g.offset / scene.anchor_depth[j]) : g.mu();
  return v;
}

void add_pair_gradient(const GaussianScene& scene, int j, PairMode mode, double rot_sign, const ParamVector& g,
                       PrimitiveGradient& out) {
  out.scale += g.segment<3>(0);
  out.rot += rot_sign * g.segment<4>(3);
  out.alpha_logit += g[7];
  out.color += g.segment<3>(8);
  if (mode == PairMode::kNormalizedOffset) {
    out.offset += g.segment<3>(11) / scene.anchor_depth[j];
  } else {
    out.offset += g.segment<3>(11);
    out.mu += g.segment<3>(11);
  }
}

}  // namespace

ImageLoss photometric_loss(const Image& render, const Image& target, const Mask& mask, double lambda_ssim) {
  if (!render.same_shape(target) || !render.same_extent(mask)) throw InputError("shape mismatch");
  const std::size_t n = mask_count(mask);
  if (n == 0) throw InputError("supervision mask is empty");
  const int channels = render.channels();
  ImageLoss out;
  out.gradient = Image(render.width(), render.height(), channels, 0.0);
  const double inv = 1.0 / (static_cast<double>(n) * channels);
  for (int y = 0; y < render.height(); ++y) {
    for (int x = 0; x < render.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < channels; ++c) {
        const double d = render(x, y, c) - target(x, y, c);
        out.value += std::abs(d) * inv;
        out.gradient(x, y, c) = d > 0 ? inv : (d < 0 ? -inv : 0.0);
      }
    }
  }
  if (lambda_ssim != 0.0) {
    const SsimResult s = ssim(render, target, &mask, true);
    out.value += lambda_ssim * (1.0 - s.value);
    for (std::size_t i = 0; i < out.gradient.data().size(); ++i) {
      out.gradient.data()[i] -= lambda_ssim * s.gradient.data()[i];
    }
  }
  return out;
}

ViewTarget make_view_target(const VideoBundle& bundle, int k, int i, const CompensationConfig& config) {
  const int T = bundle.frame_count();
  if (k < 0 || k >= T || i < 0 || i >= T) throw InputError("view index out of range");
  ViewTarget view;
  view.frame = i;
  view.pose = bundle.poses[i];
  if (i == k) {
    view.image = bundle.frames[k];
    view.mask = Mask(view.image.width(), view.image.height(), 1);
    return view;
  }
  const CameraIntrinsics& K = bundle.intrinsics;
  const FlowField* i_to_k = bundle.flow(i, k);
  const FlowField* k_to_i = bundle.flow(k, i);
  FlowField fallback;
  if (i_to_k == nullptr) {
    fallback = camera_flow(bundle.depths[i], bundle.poses[i], bundle.poses[k], K);
    i_to_k = &fallback;
  }
  CompensatedView cv = supervision_view(bundle.frames[i], *i_to_k, k_to_i, bundle.depths[k], bundle.poses[k],
                                        bundle.poses[i], K, config);
  view.image = std::move(cv.image);
  view.mask = std::move(cv.mask);
  return view;
}

double loss_rgb(const GaussianScene& scene, const CameraIntrinsics& K, const std::vector<ViewTarget>& views,
                double lambda_ssim, const RenderSettings& settings, SceneGradient* gradient) {
  int active = 0;
  for (const ViewTarget& v : views) active += mask_count(v.mask) > 0 ? 1 : 0;
  if (active == 0) throw InputError("no valid supervision in any view");
  if (gradient != nullptr && gradient->empty()) gradient->resize(scene.size());
  double total = 0.0;
  for (const ViewTarget& v : views) {
    if (mask_count(v.mask) == 0) continue;
    RenderState state;
    const RenderOutput out = render(scene, K, v.pose, settings, &state);
    ImageLoss pl = photometric_loss(out.color, v.image, v.mask, lambda_ssim);
    total += pl.value / active;
    if (gradient != nullptr) {
      for (double& g : pl.gradient.data()) g /= active;
      RenderUpstream up;
      up.color = &pl.gradient;
      render_backward(scene, state, up, *gradient);
    }
  }
  return total;
}

PairResult pair_regularizer(const GaussianScene& scene_i, const GaussianScene& scene_j, const FlowField& flow,
                            const Mask& mask, PairMode mode) {
  if (scene_i.width != scene_j.width || scene_i.height != scene_j.height || scene_i.layers != scene_j.layers ||
      flow.width() != scene_i.width || flow.height() != scene_i.height || !flow.u.same_shape(mask)) {
    throw InputError("shape mismatch");
  }
  PairResult res;
  res.grad_i.resize(scene_i.size());
  res.grad_j.resize(scene_j.size());
  const int w = scene_i.width, h = scene_i.height;

  std::vector<Mask> present(scene_j.layers, Mask(w, h, 0));
  for (std::size_t j = 0; j < scene_j.size(); ++j) {
    if (scene_j.pixel[j] >= 0) present[scene_j.layer[j]][scene_j.pixel[j]] = 1;
  }

  struct Match {
    int a;
    std::array<int, 4> taps;
    std::array<double, 4> weights;
    std::array<double, 4> signs;
    int n;
    ParamVector diff;
  };
  std::vector<Match> matches;
  for (std::size_t a = 0; a < scene_i.size(); ++a) {
    const int pix = scene_i.pixel[a];
    if (pix < 0) continue;
    const int x = pix % w, y = pix / w;
    if (!mask(x, y) || !flow.valid(x, y)) continue;
    const int layer = scene_i.layer[a];
    Match m{static_cast<int>(a), {}, {}, {}, 0, ParamVector::Zero()};
    const bool ok = bilinear_taps(w, h, x + flow.u(x, y), y + flow.v(x, y), &present[layer],
                                  [&](int xi, int yi, double wt) {
                                    m.taps[m.n] = scene_j.primitive_at(layer, xi, yi);
                                    m.weights[m.n] = wt;
                                    ++m.n;
                                  });
    if (!ok) continue;
    const Eigen::Vector4d& ref = scene_i.primitives[a].rot;
    ParamVector warped = ParamVector::Zero();
    for (int t = 0; t < m.n; ++t) {
      m.signs[t] = scene_j.primitives[m.taps[t]].rot.dot(ref) < 0.0 ? -1.0 : 1.0;
      warped += m.weights[t] * pair_params(scene_j, m.taps[t], mode, m.signs[t]);
    }
    m.diff = pair_params(scene_i, m.a, mode, 1.0) - warped;
    matches.push_back(m);
  }
  res.matched = static_cast<int>(matches.size());
  if (matches.empty()) return res;
  const double inv = 1.0 / matches.size();
  for (const Match& m : matches) {
    res.value += m.diff.squaredNorm() * inv;
    const ParamVector g = 2.0 * inv * m.diff;
    add_pair_gradient(scene_i, m.a, mode, 1.0, g, res.grad_i[m.a]);
    for (int t = 0; t < m.n; ++t) {
      add_pair_gradient(scene_j, m.taps[t], mode, m.signs[t], -m.weights[t] * g, res.grad_j[m.taps[t]]);
    }
  }
  return res;
}

std::vector<int> pair_partners(int i, int d, int s, int frame_count) {
  if (s < 1 || s % 2 == 0) throw InputError("regularization window must be odd");
  if (d < 0) throw InputError("dilation must be non-negative");
  std::vector<int> out;
  for (int j = -(s / 2); j <= s / 2; ++j) {
    const int f = i + j * (d + 1);
    if (j != 0 && f >= 0 && f < frame_count) out.push_back(f);
  }
  return out;
}

std::vector<int> cumulative_reach(int s, const std::vector<int>& schedule) {
  std::vector<int> out;
  int reach = 0;
  for (int d : schedule) {
    reach += (s / 2) * (d + 1);
    out.push_back(2 * reach + 1);
  }
  return out;
}

std::vector<int> geometric_schedule(int s, int epochs) {
  std::vector<int> out;
  int p = 1;
  for (int e = 0; e < epochs; ++e) {
    out.push_back(p - 1);
    p *= s;
  }
  return out;
}

double scale_threshold(double image_width, double depth) { return 70.0 * image_width / depth; }

double depth_threshold(double depth) { return 0.2 * depth; }

double loss_scale(const GaussianScene& scene, double image_width, SceneGradient* gradient) {
  double sum = 0.0;
  int count = 0;
  std::vector<std::pair<int, int>> hits;
  for (std::size_t j = 0; j < scene.size(); ++j) {
    const double tau = scale_threshold(image_width, scene.anchor_depth[j]);
    for (int c = 0; c < 3; ++c) {
      const double s = std::exp(scene.primitives[j].scale[c]);
      if (s > tau) {
        sum += s;
        ++count;
        hits.emplace_back(static_cast<int>(j), c);
      }
    }
  }
  if (count == 0) return 0.0;
  if (gradient != nullptr) {
    if (gradient->empty()) gradient->resize(scene.size());
    for (const auto& [j, c] : hits) (*gradient)[j].scale[c] += std::exp(scene.primitives[j].scale[c]) / count;
  }
  return sum / count;
}

DepthLoss offset_term(const ScalarField& rendered, const DepthMap& prior, const Mask* foreground) {
  if (!rendered.same_shape(prior.values) || (foreground != nullptr && !rendered.same_shape(*foreground))) {
    throw InputError("shape mismatch");
  }
  DepthLoss out;
  out.gradient = ScalarField(rendered.width(), rendered.height(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    const double D = prior.values[i];
    if (!prior.valid[i] || !(D > 0.0) || (foreground != nullptr && !(*foreground)[i])) continue;
    const double dev = rendered[i] - D;
    if (std::abs(dev) <= depth_threshold(D)) continue;
    sum += std::abs(dev);
    out.gradient[i] = dev > 0 ? 1.0 : -1.0;
    ++out.count;
  }
  if (out.count == 0) return out;
  out.value = sum / out.count;
  for (double& g : out.gradient.data()) g /= out.count;
  return out;
}

double loss_offset(const GaussianScene& scene, const CameraIntrinsics& K, const Pose& pose, const DepthMap& prior,
                   const Mask* foreground, const RenderSettings& settings, SceneGradient* gradient) {
  RenderState state;
  const RenderOutput out = render(scene, K, pose, settings, &state);
  const DepthLoss dl = offset_term(out.depth, prior, foreground);
  if (gradient != nullptr && dl.count > 0) {
    RenderUpstream up;
    up.depth = &dl.gradient;
    render_backward(scene, state, up, *gradient);
  }
  return dl.value;
}

}  // namespace splatstab
