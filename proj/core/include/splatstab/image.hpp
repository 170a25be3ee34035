#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace splatstab {

// Row-major 2D grid. Pixel centers sit at integer coordinates (x, y).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Non-zero entries are "valid".
using Mask = Grid<std::uint8_t>;
using ScalarField = Grid<double>;

// Interleaved multi-channel image with linear values (nominally [0, 1]).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 3, double fill = 0.0)
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int x, int y, int c) { return data_[index(x, y, c)]; }
  double operator()(int x, int y, int c) const { return data_[index(x, y, c)]; }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  template <typename U>
  bool same_extent(const Grid<U>& grid) const {
    return width_ == grid.width() && height_ == grid.height();
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Dense 2D displacement field. u/v are in pixels; `weight` holds forward-splat
// accumulation weights (1 for fields that were not splatted).
struct FlowField {
  ScalarField u;
  ScalarField v;
  Mask valid;
  ScalarField weight;

  FlowField() = default;
  FlowField(int width, int height)
      : u(width, height, 0.0), v(width, height, 0.0), valid(width, height, 1), weight(width, height, 1.0) {}

  int width() const { return u.width(); }
  int height() const { return u.height(); }
  bool same_shape(const FlowField& other) const { return u.same_shape(other.u); }
};

// Bilinear lookup at a continuous position. Taps that carry zero weight are
// ignored, so integer positions read exactly one pixel and are exact. Returns
// false (and leaves `out` untouched) if any weighted tap is out of bounds or
// rejected by `valid`.
template <typename Fetch>
bool bilinear_taps(int width, int height, double x, double y, const Mask* valid, Fetch&& fetch) {
  if (!(x >= 0.0) || !(y >= 0.0) || x > width - 1 || y > height - 1) return false;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int xs[2] = {x0, x0 + 1};
  const int ys[2] = {y0, y0 + 1};
  const double wx[2] = {1.0 - fx, fx};
  const double wy[2] = {1.0 - fy, fy};
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      if (xs[i] >= width || ys[j] >= height) return false;
      if (valid != nullptr && !(*valid)(xs[i], ys[j])) return false;
    }
  }
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      fetch(xs[i], ys[j], w);
    }
  }
  return true;
}

inline bool sample_bilinear(const Image& image, double x, double y, double* out,
                            const Mask* valid = nullptr) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const int channels = image.channels();
  const bool ok = bilinear_taps(image.width(), image.height(), x, y, valid, [&](int xi, int yi, double w) {
    for (int c = 0; c < channels; ++c) acc[c] += w * image(xi, yi, c);
  });
  if (!ok) return false;
  for (int c = 0; c < channels; ++c) out[c] = acc[c];
  return true;
}

inline bool sample_bilinear(const ScalarField& field, double x, double y, double* out,
                            const Mask* valid = nullptr) {
  double acc = 0.0;
  const bool ok = bilinear_taps(field.width(), field.height(), x, y, valid,
                                [&](int xi, int yi, double w) { acc += w * field(xi, yi); });
  if (ok) *out = acc;
  return ok;
}

}  // namespace splatstab
