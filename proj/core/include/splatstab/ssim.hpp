#pragma once

#include "splatstab/image.hpp"

namespace splatstab {

struct SsimSettings {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

struct SsimResult {
  double value = 1.0;
  Image gradient;  // d value / d a; empty unless requested
};

// Mean SSIM between a and b, averaged over channels and over the pixels of
// `mask` (all pixels when null). The Gaussian window is truncated at the image
// border and renormalized. Throws InputError on shape mismatch or an empty mask.
SsimResult ssim(const Image& a, const Image& b, const Mask* mask = nullptr, bool with_gradient = false,
                const SsimSettings& settings = {});

// Per-pixel SSIM map of one channel.
ScalarField ssim_map(const Image& a, const Image& b, int channel, const SsimSettings& settings = {});

}  // namespace splatstab
