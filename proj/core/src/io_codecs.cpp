#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "splatstab/error.hpp"
#include "splatstab/io.hpp"

namespace splatstab {
namespace {

template <typename T>
void put_le(Bytes& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(const Bytes& in, std::size_t offset, bool little) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, in.data() + offset, sizeof(T));
  const bool native_little = std::endian::native == std::endian::little;
  if (little != native_little) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

// Reads one whitespace-delimited header token starting at `pos`.
std::string header_token(const Bytes& b, std::size_t& pos) {
  while (pos < b.size() && std::isspace(b[pos])) ++pos;
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
  return tok;
}

}  // namespace

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const Bytes& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write " + path.string());
}

Bytes encode_pfm(const DepthMap& depth) {
  const std::string header = "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1.0\n";
  Bytes out(header.begin(), header.end());
  out.reserve(out.size() + depth.values.size() * 4);
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) {
      put_le(out, depth.valid(x, y) ? static_cast<float>(depth.values(x, y)) : 0.0f);
    }
  }
  return out;
}

DepthMap decode_pfm(const Bytes& b) {
  std::size_t pos = 0;
  const std::string magic = header_token(b, pos);
  if (magic != "Pf") throw InputError("malformed PFM header: expected Pf");
  const std::string ws = header_token(b, pos), hs = header_token(b, pos), ss = header_token(b, pos);
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    std::size_t used = 0;
    w = std::stoi(ws, &used);
    if (used != ws.size()) throw std::invalid_argument(ws);
    h = std::stoi(hs, &used);
    if (used != hs.size()) throw std::invalid_argument(hs);
    scale = std::stod(ss, &used);
    if (used != ss.size()) throw std::invalid_argument(ss);
  } catch (const std::exception&) {
    throw InputError("malformed PFM header");
  }
  if (w <= 0 || h <= 0 || scale == 0.0 || !std::isfinite(scale)) throw InputError("malformed PFM header");
  if (pos >= b.size() || !std::isspace(b[pos])) throw InputError("malformed PFM header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * h * 4;
  if (b.size() - pos < need) throw InputError("truncated PFM payload");
  const bool little = scale < 0.0;
  DepthMap d(w, h);
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      const std::size_t off = pos + (static_cast<std::size_t>(row) * w + x) * 4;
      const float v = get<float>(b, off, little);
      if (std::isnan(v)) throw InputError("NaN in PFM payload at byte offset " + std::to_string(off));
      d.values(x, y) = v;
      d.valid(x, y) = (std::isfinite(v) && v > 0.0f) ? 1 : 0;
      if (!d.valid(x, y)) d.values(x, y) = 0.0;
    }
  }
  return d;
}

DepthMap read_pfm(const fs::path& path) {
  try {
    return decode_pfm(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_pfm(const fs::path& path, const DepthMap& depth) { write_file(path, encode_pfm(depth)); }

Bytes encode_flo(const FlowField& flow) {
  Bytes out{'P', 'I', 'E', 'H'};
  put_le<std::int32_t>(out, flow.width());
  put_le<std::int32_t>(out, flow.height());
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const bool ok = flow.valid(x, y);
      put_le(out, ok ? static_cast<float>(flow.u(x, y)) : kFloInvalid);
      put_le(out, ok ? static_cast<float>(flow.v(x, y)) : kFloInvalid);
    }
  }
  return out;
}

FlowField decode_flo(const Bytes& b, std::optional<std::pair<int, int>> expected) {
  if (b.size() < 12 || std::memcmp(b.data(), "PIEH", 4) != 0) throw InputError("bad .flo magic");
  const int w = get<std::int32_t>(b, 4, true);
  const int h = get<std::int32_t>(b, 8, true);
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw InputError("bad .flo dimensions");
  if (expected && (expected->first != w || expected->second != h)) {
    throw InputError(".flo size " + std::to_string(w) + "x" + std::to_string(h) + " does not match expected " +
                     std::to_string(expected->first) + "x" + std::to_string(expected->second));
  }
  const std::size_t need = 12 + static_cast<std::size_t>(w) * h * 8;
  if (b.size() < need) throw InputError("truncated .flo payload");
  FlowField f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t off = 12 + (static_cast<std::size_t>(y) * w + x) * 8;
      const float u = get<float>(b, off, true), v = get<float>(b, off + 4, true);
      if (!std::isfinite(u) || !std::isfinite(v) || std::abs(u) > 1e9f || std::abs(v) > 1e9f) {
        f.valid(x, y) = 0;
        continue;
      }
      f.u(x, y) = u;
      f.v(x, y) = v;
    }
  }
  return f;
}

FlowField read_flo(const fs::path& path, std::optional<std::pair<int, int>> expected) {
  try {
    return decode_flo(read_file(path), expected);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_flo(const fs::path& path, const FlowField& flow) { write_file(path, encode_flo(flow)); }

Image read_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw InputError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw InputError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height), 3);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data()[i] = buf[i] / 255.0;
  return out;
}

namespace {

std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

void write_png_buffer(const fs::path& path, int w, int h, std::uint32_t format, const std::vector<std::uint8_t>& buf) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw InputError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace

void write_png(const fs::path& path, const Image& image) {
  std::vector<std::uint8_t> buf(image.pixel_count() * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        buf[(static_cast<std::size_t>(y) * image.width() + x) * 3 + c] =
            to_byte(image(x, y, std::min(c, image.channels() - 1)));
      }
    }
  }
  write_png_buffer(path, image.width(), image.height(), PNG_FORMAT_RGB, buf);
}

Mask read_mask_png(const fs::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw InputError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw InputError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  Mask m(static_cast<int>(img.width), static_cast<int>(img.height), 0);
  for (std::size_t i = 0; i < buf.size(); ++i) m[i] = buf[i] >= 128 ? 1 : 0;
  return m;
}

void write_mask_png(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> buf(mask.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = mask[i] ? 255 : 0;
  write_png_buffer(path, mask.width(), mask.height(), PNG_FORMAT_GRAY, buf);
}

Bytes encode_scene(const GaussianScene& scene) {
  Bytes out{'G', 'A', 'V', 'S'};
  put_le<std::uint32_t>(out, kSceneVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(scene.size()));
  for (const GaussianPrimitive& g : scene.primitives) {
    const Eigen::Vector3d mu = g.mu();
    for (int i = 0; i < 3; ++i) put_le(out, static_cast<float>(mu[i]));
    for (int i = 0; i < 3; ++i) put_le(out, static_cast<float>(g.scale[i]));
    for (int i = 0; i < 4; ++i) put_le(out, static_cast<float>(g.rot[i]));
    put_le(out, static_cast<float>(g.alpha_logit));
    for (int i = 0; i < 3; ++i) put_le(out, static_cast<float>(g.color[i]));
    for (int i = 0; i < 3; ++i) put_le(out, static_cast<float>(g.offset[i]));
  }
  return out;
}

GaussianScene decode_scene(const Bytes& b) {
  if (b.size() < 12 || std::memcmp(b.data(), "GAVS", 4) != 0) throw InputError("bad scene magic");
  const std::uint32_t version = get<std::uint32_t>(b, 4, true);
  if (version != kSceneVersion) throw InputError("unsupported scene version " + std::to_string(version));
  const std::uint32_t count = get<std::uint32_t>(b, 8, true);
  if (b.size() != 12 + static_cast<std::size_t>(count) * 17 * 4) throw InputError("scene payload size mismatch");
  GaussianScene scene;
  std::size_t off = 12;
  auto next = [&]() {
    const float v = get<float>(b, off, true);
    off += 4;
    if (!std::isfinite(v)) throw InputError("non-finite scene value at byte offset " + std::to_string(off - 4));
    return static_cast<double>(v);
  };
  for (std::uint32_t j = 0; j < count; ++j) {
    GaussianPrimitive g;
    Eigen::Vector3d mu;
    for (int i = 0; i < 3; ++i) mu[i] = next();
    for (int i = 0; i < 3; ++i) g.scale[i] = next();
    for (int i = 0; i < 4; ++i) g.rot[i] = next();
    g.alpha_logit = next();
    for (int i = 0; i < 3; ++i) g.color[i] = next();
    for (int i = 0; i < 3; ++i) g.offset[i] = next();
    g.anchor = mu - g.offset;
    scene.primitives.push_back(g);
    scene.pixel.push_back(-1);
    scene.layer.push_back(0);
    scene.anchor_depth.push_back(1.0);
  }
  return scene;
}

void write_scene(const fs::path& path, const GaussianScene& scene) { write_file(path, encode_scene(scene)); }

GaussianScene read_scene(const fs::path& path) {
  try {
    return decode_scene(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace splatstab
