#include "splatstab/ssim.hpp"

#include <cmath>
#include <vector>

#include "splatstab/error.hpp"

namespace splatstab {
namespace {

std::vector<double> gaussian_kernel(const SsimSettings& s) {
  if (s.window < 1 || s.window % 2 == 0) throw InputError("SSIM window must be odd");
  const int r = s.window / 2;
  std::vector<double> k(s.window);
  for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-0.5 * i * i / (s.sigma * s.sigma));
  return k;
}

// Unnormalized separable correlation with a symmetric kernel, zero outside.
ScalarField blur_raw(const ScalarField& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size()) / 2;
  const int w = in.width(), h = in.height();
  ScalarField tmp(w, h, 0.0), out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-r, -x); i <= std::min(r, w - 1 - x); ++i) acc += k[i + r] * in(x + i, y);
      tmp(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = std::max(-r, -y); i <= std::min(r, h - 1 - y); ++i) acc += k[i + r] * tmp(x, y + i);
      out(x, y) = acc;
    }
  }
  return out;
}

struct Window {
  std::vector<double> kernel;
  ScalarField norm;

  Window(int w, int h, const SsimSettings& s) : kernel(gaussian_kernel(s)), norm(blur_raw(ScalarField(w, h, 1.0), kernel)) {}

  ScalarField mean(const ScalarField& in) const {
    ScalarField out = blur_raw(in, kernel);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= norm[i];
    return out;
  }

  ScalarField mean_transposed(const ScalarField& g) const {
    ScalarField scaled = g;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] /= norm[i];
    return blur_raw(scaled, kernel);
  }
};

ScalarField channel(const Image& img, int c) {
  ScalarField out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(x, y) = img(x, y, c);
  return out;
}

struct ChannelStats {
  ScalarField mu_a, mu_b, e_aa, e_bb, e_ab;
};

ChannelStats stats(const ScalarField& a, const ScalarField& b, const Window& win) {
  ScalarField aa = a, bb = b, ab = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  return {win.mean(a), win.mean(b), win.mean(aa), win.mean(bb), win.mean(ab)};
}

void check_shapes(const Image& a, const Image& b) {
  if (!a.same_shape(b) || a.empty()) throw InputError("shape mismatch");
}

}  // namespace

ScalarField ssim_map(const Image& a, const Image& b, int c, const SsimSettings& settings) {
  check_shapes(a, b);
  const Window win(a.width(), a.height(), settings);
  const ChannelStats st = stats(channel(a, c), channel(b, c), win);
  ScalarField out(a.width(), a.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ma = st.mu_a[i], mb = st.mu_b[i];
    const double A = 2 * ma * mb + settings.c1;
    const double B = 2 * (st.e_ab[i] - ma * mb) + settings.c2;
    const double C = ma * ma + mb * mb + settings.c1;
    const double D = (st.e_aa[i] - ma * ma) + (st.e_bb[i] - mb * mb) + settings.c2;
    out[i] = A * B / (C * D);
  }
  return out;
}

SsimResult ssim(const Image& a, const Image& b, const Mask* mask, bool with_gradient, const SsimSettings& settings) {
  check_shapes(a, b);
  if (mask != nullptr && !a.same_extent(*mask)) throw InputError("shape mismatch");
  const int w = a.width(), h = a.height(), channels = a.channels();
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) count += (mask == nullptr || (*mask)[i]) ? 1 : 0;
  if (count == 0) throw InputError("SSIM mask is empty");

  const Window win(w, h, settings);
  SsimResult result;
  result.value = 0.0;
  if (with_gradient) result.gradient = Image(w, h, channels, 0.0);
  const double scale = 1.0 / (static_cast<double>(count) * channels);

  for (int c = 0; c < channels; ++c) {
    const ScalarField ca = channel(a, c), cb = channel(b, c);
    const ChannelStats st = stats(ca, cb, win);
    ScalarField g_mu(w, h, 0.0), g_aa(w, h, 0.0), g_ab(w, h, 0.0);
    for (std::size_t i = 0; i < ca.size(); ++i) {
      if (mask != nullptr && !(*mask)[i]) continue;
      const double ma = st.mu_a[i], mb = st.mu_b[i];
      const double A = 2 * ma * mb + settings.c1;
      const double B = 2 * (st.e_ab[i] - ma * mb) + settings.c2;
      const double C = ma * ma + mb * mb + settings.c1;
      const double D = (st.e_aa[i] - ma * ma) + (st.e_bb[i] - mb * mb) + settings.c2;
      const double CD = C * D;
      const double S = A * B / CD;
      result.value += S * scale;
      if (!with_gradient) continue;
      g_mu[i] = scale * (2 * mb * (B - A) / CD - S * (2 * ma / C - 2 * ma / D));
      g_aa[i] = scale * (-S / D);
      g_ab[i] = scale * (2 * A / CD);
    }
    if (!with_gradient) continue;
    const ScalarField t_mu = win.mean_transposed(g_mu);
    const ScalarField t_aa = win.mean_transposed(g_aa);
    const ScalarField t_ab = win.mean_transposed(g_ab);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        result.gradient(x, y, c) = t_mu(x, y) + 2 * ca(x, y) * t_aa(x, y) + cb(x, y) * t_ab(x, y);
      }
    }
  }
  return result;
}

}  // namespace splatstab
