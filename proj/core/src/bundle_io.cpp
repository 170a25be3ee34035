#include <cstdio>
#include <regex>
#include <set>

#include "splatstab/error.hpp"
#include "splatstab/io.hpp"

namespace splatstab {
namespace {

std::string size_str(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

// Indexed files of a directory, keyed by the parsed index.
std::map<int, fs::path> indexed_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  const std::regex pattern("(\\d{6})\\" + extension);
  std::map<int, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) out[std::stoi(m[1])] = entry.path();
  }
  return out;
}

void require_contiguous(const std::map<int, fs::path>& files, const fs::path& dir) {
  int expected = 0;
  for (const auto& [index, path] : files) {
    if (index != expected) {
      throw InputError(dir.string() + ": non-contiguous frames (missing index " + std::to_string(expected) + ")");
    }
    ++expected;
  }
}

}  // namespace

const FlowField* VideoBundle::flow(int from, int to) const {
  const auto it = flows.find({from, to});
  return it == flows.end() ? nullptr : &it->second;
}

void VideoBundle::validate() const {
  intrinsics.validate();
  const int T = frame_count();
  if (T < 1) throw InputError("bundle has no frames");
  const int w = intrinsics.width, h = intrinsics.height;
  if (static_cast<int>(depths.size()) != T) {
    throw InputError("frame/depth count mismatch: " + std::to_string(T) + " frames, " +
                     std::to_string(depths.size()) + " depths");
  }
  if (static_cast<int>(poses.size()) != T) {
    throw InputError("frame/pose count mismatch: " + std::to_string(T) + " frames, " + std::to_string(poses.size()) +
                     " poses");
  }
  if (!poses_smooth.empty() && static_cast<int>(poses_smooth.size()) != T) {
    throw InputError("frame/smooth pose count mismatch");
  }
  if (!dynamic_masks.empty() && static_cast<int>(dynamic_masks.size()) != T) {
    throw InputError("frame/mask count mismatch");
  }
  for (int k = 0; k < T; ++k) {
    if (frames[k].width() != w || frames[k].height() != h || frames[k].channels() != 3) {
      throw InputError("frame " + std::to_string(k) + " is " + size_str(frames[k].width(), frames[k].height()) +
                       ", intrinsics say " + size_str(w, h));
    }
    if (depths[k].width() != w || depths[k].height() != h) {
      throw InputError("depth " + std::to_string(k) + " is " + size_str(depths[k].width(), depths[k].height()) +
                       ", intrinsics say " + size_str(w, h));
    }
    if (!dynamic_masks.empty() && (dynamic_masks[k].width() != w || dynamic_masks[k].height() != h)) {
      throw InputError("mask " + std::to_string(k) + " has the wrong size");
    }
  }
  for (const auto* map : {&flows, &camera_flows}) {
    for (const auto& [key, f] : *map) {
      if (key.first < 0 || key.first >= T || key.second < 0 || key.second >= T || key.first == key.second) {
        throw InputError("flow " + flow_name(key.first, key.second) + " references an invalid frame pair");
      }
      if (f.width() != w || f.height() != h) {
        throw InputError("flow " + flow_name(key.first, key.second) + " is " + size_str(f.width(), f.height()) +
                         ", intrinsics say " + size_str(w, h));
      }
    }
  }
  if (gyro) gyro->validate();
  if (points) points->validate();
}

std::string frame_name(int index, const char* extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d%s", index, extension);
  return buf;
}

std::string flow_name(int from, int to) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d_%06d.flo", from, to);
  return buf;
}

BundlePaths BundlePaths::in_directory(const fs::path& root) {
  BundlePaths p;
  p.frames = root / "frames";
  p.depths = root / "depths";
  if (fs::is_directory(root / "flows")) p.flows = root / "flows";
  if (fs::is_directory(root / "masks")) p.masks = root / "masks";
  p.poses = root / "poses.json";
  if (fs::exists(root / "poses_smooth.json")) p.poses_smooth = root / "poses_smooth.json";
  p.intrinsics = root / "intrinsics.json";
  if (fs::exists(root / "gyro.jsonl")) p.gyro = root / "gyro.jsonl";
  if (fs::exists(root / "points.json")) p.points = root / "points.json";
  return p;
}

VideoBundle load_bundle(const BundlePaths& paths) {
  VideoBundle b;
  b.intrinsics = read_intrinsics(paths.intrinsics);
  const int w = b.intrinsics.width, h = b.intrinsics.height;

  const auto frame_files = indexed_files(paths.frames, ".png");
  const auto depth_files = indexed_files(paths.depths, ".pfm");
  require_contiguous(frame_files, paths.frames);
  require_contiguous(depth_files, paths.depths);
  if (frame_files.empty()) throw InputError(paths.frames.string() + ": no frames");
  if (frame_files.size() != depth_files.size()) {
    throw InputError("frame/depth count mismatch: " + paths.frames.string() + " has " +
                     std::to_string(frame_files.size()) + ", " + paths.depths.string() + " has " +
                     std::to_string(depth_files.size()));
  }
  b.poses = read_poses(paths.poses);
  if (b.poses.size() != frame_files.size()) {
    throw InputError("frame/pose count mismatch: " + paths.frames.string() + " has " +
                     std::to_string(frame_files.size()) + ", " + paths.poses.string() + " has " +
                     std::to_string(b.poses.size()));
  }
  if (!paths.poses_smooth.empty()) {
    b.poses_smooth = read_poses(paths.poses_smooth);
    if (b.poses_smooth.size() != b.poses.size()) {
      throw InputError("pose count mismatch: " + paths.poses.string() + " vs " + paths.poses_smooth.string());
    }
  }

  for (const auto& [k, path] : frame_files) {
    Image img = read_png(path);
    if (img.width() != w || img.height() != h) {
      throw InputError(path.string() + " is " + size_str(img.width(), img.height()) + " but " +
                       paths.intrinsics.string() + " says " + size_str(w, h));
    }
    b.frames.push_back(std::move(img));
  }
  for (const auto& [k, path] : depth_files) {
    DepthMap d = read_pfm(path);
    if (d.width() != w || d.height() != h) {
      throw InputError(path.string() + " is " + size_str(d.width(), d.height()) + " but " +
                       frame_files.at(k).string() + " is " + size_str(w, h));
    }
    b.depths.push_back(std::move(d));
  }
  const int T = b.frame_count();

  if (!paths.flows.empty()) {
    if (!fs::is_directory(paths.flows)) throw InputError("not a directory: " + paths.flows.string());
    const std::regex pattern("(\\d{6})_(\\d{6})\\.flo");
    for (const auto& entry : fs::directory_iterator(paths.flows)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (!entry.is_regular_file() || !std::regex_match(name, m, pattern)) continue;
      const int a = std::stoi(m[1]), c = std::stoi(m[2]);
      if (a >= T || c >= T || a == c) {
        throw InputError(entry.path().string() + " references frames outside " + paths.frames.string());
      }
      b.flows.emplace(FramePair{a, c}, read_flo(entry.path(), std::make_pair(w, h)));
    }
  }
  if (!paths.masks.empty()) {
    const auto mask_files = indexed_files(paths.masks, ".png");
    require_contiguous(mask_files, paths.masks);
    if (static_cast<int>(mask_files.size()) != T) {
      throw InputError("frame/mask count mismatch: " + paths.frames.string() + " vs " + paths.masks.string());
    }
    for (const auto& [k, path] : mask_files) {
      Mask m = read_mask_png(path);
      if (m.width() != w || m.height() != h) {
        throw InputError(path.string() + " does not match the size of " + frame_files.at(k).string());
      }
      b.dynamic_masks.push_back(std::move(m));
    }
  }
  if (!paths.gyro.empty()) b.gyro = read_gyro(paths.gyro);
  if (!paths.points.empty()) b.points = read_points(paths.points);
  b.validate();
  return b;
}

void write_bundle(const fs::path& root, const VideoBundle& b) {
  b.validate();
  fs::create_directories(root / "frames");
  fs::create_directories(root / "depths");
  for (int k = 0; k < b.frame_count(); ++k) {
    write_png(root / "frames" / frame_name(k, ".png"), b.frames[k]);
    write_pfm(root / "depths" / frame_name(k, ".pfm"), b.depths[k]);
  }
  if (!b.flows.empty()) {
    fs::create_directories(root / "flows");
    for (const auto& [key, f] : b.flows) write_flo(root / "flows" / flow_name(key.first, key.second), f);
  }
  if (b.has_dynamic_masks()) {
    for (int k = 0; k < b.frame_count(); ++k) write_mask_png(root / "masks" / frame_name(k, ".png"), b.dynamic_masks[k]);
  }
  write_intrinsics(root / "intrinsics.json", b.intrinsics);
  write_poses(root / "poses.json", b.poses);
  if (!b.poses_smooth.empty()) write_poses(root / "poses_smooth.json", b.poses_smooth);
  if (b.gyro) write_gyro(root / "gyro.jsonl", *b.gyro);
  if (b.points) write_points(root / "points.json", *b.points);
}

}  // namespace splatstab
