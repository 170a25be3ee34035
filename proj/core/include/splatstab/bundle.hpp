#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "splatstab/geometry.hpp"
#include "splatstab/image.hpp"
#include "splatstab/rolling_shutter.hpp"
#include "splatstab/scale_align.hpp"
#include "splatstab/trajectory.hpp"

namespace splatstab {

using FramePair = std::pair<int, int>;  // (from, to)

// Everything the pipeline consumes for one video. Flows are keyed by
// (from, to) and follow the F_{from→to} convention of flow.hpp.
struct VideoBundle {
  CameraIntrinsics intrinsics;
  double frame_rate = 30.0;
  std::vector<Image> frames;
  std::vector<DepthMap> depths;
  std::map<FramePair, FlowField> flows;         // total flow
  std::map<FramePair, FlowField> camera_flows;  // only from the synthetic generator
  std::vector<Mask> dynamic_masks;              // empty when absent
  Trajectory poses;
  Trajectory poses_smooth;  // empty when absent
  std::optional<GyroLog> gyro;
  std::optional<SparsePointSet> points;

  int frame_count() const { return static_cast<int>(frames.size()); }
  const FlowField* flow(int from, int to) const;
  bool has_dynamic_masks() const { return !dynamic_masks.empty(); }

  // Throws InputError on any count or shape inconsistency.
  void validate() const;
};

}  // namespace splatstab
