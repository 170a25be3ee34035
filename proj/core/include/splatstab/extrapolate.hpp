#pragma once

#include <cstdint>

#include "splatstab/bundle.hpp"

namespace splatstab {

inline constexpr int kDefaultPad = 96;

enum FillSource : std::uint8_t {
  kFillOriginal = 0,
  kFillPropagated = 1,
  kFillReplicated = 2,
};

struct PaddedBundle {
  VideoBundle bundle;      // padded frames, depths, flows, masks and intrinsics
  std::vector<Mask> fill;  // per pixel FillSource
  int pad = 0;
};

// Pads every frame by `pad` pixels on all sides. Border pixels take the color
// and depth of neighbor-frame pixels reprojected through depth and pose (the
// nearest frame in time wins, then the nearest surface); what stays empty is
// filled from the nearest filled pixel. Flows keep their values inside and get
// the camera flow of the padded depth in the border. `window` bounds how far
// in time contributors are searched.
PaddedBundle extrapolate_frames(const VideoBundle& bundle, int pad, int window = 10);

}  // namespace splatstab
