#pragma once

#include "splatstab/geometry.hpp"
#include "splatstab/image.hpp"

namespace splatstab {

// Flow sign convention: F_{a→b}(p) is defined on frame a's pixel grid and
// points to where p's content sits in frame b (q = p + F(p)).

// Rigid flow F^cam_{k→i} from frame k's depth: unproject at P_k, project at
// P_i, subtract the pixel grid. Invalid where depth is invalid or the point
// lands behind camera i.
FlowField camera_flow(const DepthMap& depth_k, const Pose& P_k, const Pose& P_i, const CameraIntrinsics& K);

inline constexpr double kDefaultSplatMinWeight = 0.25;

// Inverts a flow by forward splatting: pixel p deposits -F(p) at p + F(p) with
// bilinear weights; deposits are normalized by total weight and destinations
// with weight below `min_weight` are invalid.
FlowField forward_splat_flow(const FlowField& flow, double min_weight = kDefaultSplatMinWeight);

// F^obj = F - F^cam, valid where both are.
FlowField object_flow(const FlowField& total, const FlowField& camera);

// Forward-backward consistency: valid iff
// |f_ab(p) + f_ba(p + f_ab(p))| <= abs_tol + rel_tol · |f_ab(p)| and both
// fields are valid at the queried locations.
Mask bidirectional_mask(const FlowField& f_ab, const FlowField& f_ba, double abs_tol = 1.0, double rel_tol = 0.05);

// Inverse of an object flow for backward sampling. Pixels moving by at least
// `motion_threshold` are splatted first and occlude static content at their
// destinations.
FlowField invert_object_flow(const FlowField& object_flow_i_to_k, double motion_threshold = 0.5,
                             double min_weight = kDefaultSplatMinWeight);

struct CompensatedView {
  Image image;
  Mask mask;  // supervision validity
};

// Backward warp of I_i: output p reads I_i at p + sampling(p). `source_mask`
// marks readable pixels of I_i; the output mask is false wherever the sampling
// field is invalid or any bilinear tap is out of bounds or masked. Pixels with
// a false mask keep I_i's value.
CompensatedView compensate_neighbor(const Image& I_i, const FlowField& sampling, const Mask& source_mask);

struct CompensationConfig {
  bool enabled = true;
  double splat_min_weight = kDefaultSplatMinWeight;
  double abs_tol = 1.0;
  double rel_tol = 0.05;
  double motion_threshold = 0.5;
};

// Builds the supervision target for rendering frame k's scene at P_i: the
// neighbor I_i with its dynamic content moved back to time k. `total_k_to_i`
// may be null, in which case no bidirectional check is applied.
CompensatedView supervision_view(const Image& I_i, const FlowField& total_i_to_k, const FlowField* total_k_to_i,
                                 const DepthMap& depth_k, const Pose& P_k, const Pose& P_i,
                                 const CameraIntrinsics& K, const CompensationConfig& config);

}  // namespace splatstab
