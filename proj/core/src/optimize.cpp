#include "splatstab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

constexpr int kParams = 14;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;

void add_scaled(SceneGradient& dst, const SceneGradient& src, double s) {
  if (dst.empty()) dst.resize(src.size());
  for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j] * s;
}

Eigen::Matrix<double, kParams, 1> pack(const PrimitiveGradient& g) {
  Eigen::Matrix<double, kParams, 1> v;
  v << g.offset, g.scale, g.rot, g.alpha_logit, g.color;
  return v;
}

}  // namespace

void OptimConfig::validate() const {
  if (epochs < 0 || static_cast<int>(dilation_schedule.size()) != epochs) {
    throw InputError("dilation schedule length must equal the epoch count");
  }
  if (reg_window < 1 || reg_window % 2 == 0) throw InputError("regularization window must be odd");
  if (window < 1) throw InputError("frame window must be at least 1");
  if (views_per_step < 1) throw InputError("views per step must be at least 1");
  if (steps_per_epoch < 0) throw InputError("steps per epoch must be non-negative");
  for (int d : dilation_schedule) {
    if (d < 0) throw InputError("dilation must be non-negative");
  }
  if (weights.ssim < 0 || weights.consistent < 0 || weights.scale < 0 || weights.offset < 0) {
    throw InputError("loss weights must be non-negative");
  }
}

int dilation_for_epoch(int epoch, const OptimConfig& config) {
  if (epoch < 0 || epoch >= static_cast<int>(config.dilation_schedule.size())) {
    throw InputError("epoch out of range");
  }
  return config.dilation_schedule[epoch];
}

ObjectiveEvaluation evaluate_objective(const GaussianScene& scene, const CameraIntrinsics& K,
                                       const std::vector<ViewTarget>& views, const std::vector<PairTarget>& pairs,
                                       const DepthMap& prior_depth, const Mask* foreground, const OptimConfig& config) {
  ObjectiveEvaluation ev;
  ev.gradient.resize(scene.size());
  const LossWeights& w = config.weights;
  ev.loss.rgb = loss_rgb(scene, K, views, w.ssim, config.render, &ev.gradient);

  const double inv_s = 1.0 / config.reg_window;
  for (const PairTarget& p : pairs) {
    const PairResult pr = pair_regularizer(scene, *p.scene, p.flow, p.mask, config.pair_mode);
    ev.loss.consistent += pr.value * inv_s;
    if (w.consistent != 0.0) add_scaled(ev.gradient, pr.grad_i, w.consistent * inv_s);
  }

  SceneGradient g_scale;
  ev.loss.scale = loss_scale(scene, K.width, &g_scale);
  if (!g_scale.empty() && w.scale != 0.0) add_scaled(ev.gradient, g_scale, w.scale);

  SceneGradient g_offset;
  ev.loss.offset = loss_offset(scene, K, views.empty() ? Pose{} : views.front().pose, prior_depth, foreground,
                               config.render, &g_offset);
  if (!g_offset.empty() && w.offset != 0.0) add_scaled(ev.gradient, g_offset, w.offset);

  ev.loss.combine(w);
  return ev;
}

FrameOptimizer::FrameOptimizer(int frame, const VideoBundle& bundle, GaussianScene scene, const OptimConfig& config)
    : frame_(frame), bundle_(bundle), scene_(std::move(scene)), config_(config) {
  config_.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(frame)};
  rng_.seed(seq);
  if (config_.optimizer == OptimizerKind::kAdam) {
    m_.assign(scene_.size() * kParams, 0.0);
    v_.assign(scene_.size() * kParams, 0.0);
  }
  if (config_.offset_foreground_only && bundle_.has_dynamic_masks()) {
    foreground_ = bundle_.dynamic_masks[frame];
    for (std::size_t i = 0; i < foreground_.size(); ++i) foreground_[i] = foreground_[i] ? 0 : 1;
  }
}

const ViewTarget& FrameOptimizer::target(int i) {
  auto it = targets_.find(i);
  if (it == targets_.end()) it = targets_.emplace(i, make_view_target(bundle_, frame_, i, config_.compensation)).first;
  return it->second;
}

const std::vector<PairTarget>& FrameOptimizer::pairs(int d, const std::vector<GaussianScene>& snapshot) {
  auto it = pair_cache_.find(d);
  if (it == pair_cache_.end()) {
    std::vector<PairTarget> list;
    const CameraIntrinsics& K = bundle_.intrinsics;
    for (int j : pair_partners(frame_, d, config_.reg_window, bundle_.frame_count())) {
      PairTarget p;
      p.partner = j;
      const FlowField* fwd = bundle_.flow(frame_, j);
      p.flow = fwd != nullptr ? *fwd : camera_flow(bundle_.depths[frame_], bundle_.poses[frame_], bundle_.poses[j], K);
      const FlowField* bwd = bundle_.flow(j, frame_);
      const FlowField back =
          bwd != nullptr ? *bwd : camera_flow(bundle_.depths[j], bundle_.poses[j], bundle_.poses[frame_], K);
      p.mask = bidirectional_mask(p.flow, back, config_.compensation.abs_tol, config_.compensation.rel_tol);
      list.push_back(std::move(p));
    }
    it = pair_cache_.emplace(d, std::move(list)).first;
  }
  for (PairTarget& p : it->second) p.scene = &snapshot.at(p.partner);
  return it->second;
}

void FrameOptimizer::apply(const SceneGradient& gradient) {
  const LearningRates& r = config_.rates;
  Eigen::Matrix<double, kParams, 1> lr;
  lr << 0, 0, 0, r.scale, r.scale, r.scale, r.rot, r.rot, r.rot, r.rot, r.alpha, r.color, r.color, r.color;
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t j = 0; j < scene_.size(); ++j) {
    const Eigen::Matrix<double, kParams, 1> g = pack(gradient[j]);
    lr.head<3>().setConstant(r.offset * scene_.anchor_depth[j]);
    Eigen::Matrix<double, kParams, 1> step;
    if (config_.optimizer == OptimizerKind::kAdam) {
      for (int c = 0; c < kParams; ++c) {
        double& m = m_[j * kParams + c];
        double& v = v_[j * kParams + c];
        m = kBeta1 * m + (1.0 - kBeta1) * g[c];
        v = kBeta2 * v + (1.0 - kBeta2) * g[c] * g[c];
        step[c] = lr[c] * (m / bc1) / (std::sqrt(v / bc2) + kEpsilon);
      }
    } else {
      step = lr.cwiseProduct(g);
    }
    GaussianPrimitive& p = scene_.primitives[j];
    p.offset -= step.segment<3>(0);
    p.scale -= step.segment<3>(3);
    p.rot -= step.segment<4>(6);
    p.rot.normalize();
    p.alpha_logit -= step[10];
    p.color -= step.segment<3>(11);
  }
}

void FrameOptimizer::run_epoch(int epoch, const std::vector<GaussianScene>& snapshot) {
  const int d = dilation_for_epoch(epoch, config_);
  const int T = bundle_.frame_count();
  const std::vector<PairTarget>& pair_list = pairs(d, snapshot);
  std::vector<int> candidates;
  for (int i = std::max(0, frame_ - config_.window); i <= std::min(T - 1, frame_ + config_.window); ++i) {
    if (i != frame_) candidates.push_back(i);
  }
  const Mask* fg = foreground_.empty() ? nullptr : &foreground_;

  for (int step = 0; step < config_.steps_per_epoch; ++step) {
    const int picks = std::min<int>(config_.views_per_step - 1, static_cast<int>(candidates.size()));
    for (int a = 0; a < picks; ++a) {
      std::uniform_int_distribution<int> dist(a, static_cast<int>(candidates.size()) - 1);
      std::swap(candidates[a], candidates[dist(rng_)]);
    }
    std::vector<ViewTarget> views{target(frame_)};
    for (int a = 0; a < picks; ++a) views.push_back(target(candidates[a]));

    const ObjectiveEvaluation ev = evaluate_objective(scene_, bundle_.intrinsics, views, pair_list,
                                                      bundle_.depths[frame_], fg, config_);
    if (!std::isfinite(ev.loss.total)) {
      throw NumericalError("loss diverged at frame " + std::to_string(frame_) + ", epoch " +
                           std::to_string(epoch) + ", step " + std::to_string(step));
    }
    history_.push_back({frame_, epoch, step, ev.loss});
    apply(ev.gradient);
  }
  targets_.clear();
  pair_cache_.clear();
}

std::vector<GaussianScene> build_scenes(const VideoBundle& bundle, const SceneInit& init) {
  std::vector<GaussianScene> scenes;
  scenes.reserve(bundle.frame_count());
  for (int k = 0; k < bundle.frame_count(); ++k) {
    scenes.push_back(build_scene(bundle.frames[k], bundle.depths[k], bundle.intrinsics, bundle.poses[k], init));
    scenes.back().source_frame = k;
  }
  return scenes;
}

OptimizationResult optimize_all(const VideoBundle& bundle, std::vector<GaussianScene> scenes,
                                const OptimConfig& config) {
  config.validate();
  if (static_cast<int>(scenes.size()) != bundle.frame_count()) throw InputError("scene count does not match bundle");
  std::vector<FrameOptimizer> optimizers;
  optimizers.reserve(scenes.size());
  for (int k = 0; k < bundle.frame_count(); ++k) optimizers.emplace_back(k, bundle, scenes[k], config);
  for (int e = 0; e < config.epochs; ++e) {
    const std::vector<GaussianScene> snapshot = scenes;
    for (auto& opt : optimizers) opt.run_epoch(e, snapshot);
    for (int k = 0; k < bundle.frame_count(); ++k) scenes[k] = optimizers[k].scene();
  }
  OptimizationResult result;
  result.scenes = std::move(scenes);
  for (const auto& opt : optimizers) {
    result.history.insert(result.history.end(), opt.history().begin(), opt.history().end());
  }
  return result;
}

OptimizationResult optimize_scene(int k, const VideoBundle& bundle, const OptimConfig& config) {
  if (k < 0 || k >= bundle.frame_count()) throw InputError("frame index out of range");
  std::vector<GaussianScene> scenes = build_scenes(bundle, config.init);
  FrameOptimizer opt(k, bundle, scenes[k], config);
  for (int e = 0; e < config.epochs; ++e) opt.run_epoch(e, scenes);
  OptimizationResult result;
  scenes[k] = opt.scene();
  result.scenes = std::move(scenes);
  result.history = opt.history();
  return result;
}

}  // namespace splatstab
