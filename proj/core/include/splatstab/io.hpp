#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "splatstab/bundle.hpp"
#include "splatstab/gsplat.hpp"
#include "splatstab/optimize.hpp"
#include "splatstab/metrics.hpp"
#include "splatstab/rolling_shutter.hpp"
#include "splatstab/synthetic.hpp"

namespace splatstab {

namespace fs = std::filesystem;

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const fs::path& path);
void write_file(const fs::path& path, const Bytes& bytes);

// Single-channel PFM ("Pf"). Rows are stored bottom-up; a negative scale marks
// little-endian data. Invalid depths are written as 0 and zero or negative
// values read back as invalid. Malformed headers, truncated payloads and NaN
// values raise InputError, the latter naming the byte offset.
Bytes encode_pfm(const DepthMap& depth);
DepthMap decode_pfm(const Bytes& bytes);
DepthMap read_pfm(const fs::path& path);
void write_pfm(const fs::path& path, const DepthMap& depth);

// Middlebury .flo: "PIEH", i32 width, i32 height, interleaved float32 (u, v).
// Invalid vectors are written as 1e10 and components above 1e9 read as invalid.
inline constexpr float kFloInvalid = 1e10f;
Bytes encode_flo(const FlowField& flow);
FlowField decode_flo(const Bytes& bytes, std::optional<std::pair<int, int>> expected_size = std::nullopt);
FlowField read_flo(const fs::path& path, std::optional<std::pair<int, int>> expected_size = std::nullopt);
void write_flo(const fs::path& path, const FlowField& flow);

// 8-bit PNG. Gray and alpha channels are expanded/dropped to RGB; values map
// linearly to [0, 1].
Image read_png(const fs::path& path);
void write_png(const fs::path& path, const Image& image);
Mask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const Mask& mask);

// Binary scene dump: "GAVS", u32 version, u32 count, then 17 little-endian
// float32 per primitive (mu 3, scale 3, rot 4, alpha_logit 1, color 3, offset 3).
inline constexpr std::uint32_t kSceneVersion = 1;
Bytes encode_scene(const GaussianScene& scene);
GaussianScene decode_scene(const Bytes& bytes);
void write_scene(const fs::path& path, const GaussianScene& scene);
GaussianScene read_scene(const fs::path& path);

// JSON documents.
CameraIntrinsics read_intrinsics(const fs::path& path);
void write_intrinsics(const fs::path& path, const CameraIntrinsics& K);
// [{"frame": k, "q": [w, x, y, z], "t": [x, y, z]}, ...];
// frames must be 0..T-1 in order ("non-contiguous frames" otherwise).
Trajectory read_poses(const fs::path& path);
void write_poses(const fs::path& path, const Trajectory& poses);
Pose read_pose(const fs::path& path);  // one pose object, or the first entry of a list
// JSON lines: {"t": s, "q": [w, x, y, z]} / {"t": s, "dx": x, "dy": y}.
GyroLog read_gyro(const fs::path& path);
void write_gyro(const fs::path& path, const GyroLog& log);
OisLog read_ois(const fs::path& path);
void write_ois(const fs::path& path, const OisLog& log);
// {"points": [[x, y, z], ...], "visibility": {"k": [ids...]}}
SparsePointSet read_points(const fs::path& path);
void write_points(const fs::path& path, const SparsePointSet& points);
// [{"points": [[u, v] | null, ...]}, ...]
TrackSet read_tracks(const fs::path& path);
void write_tracks(const fs::path& path, const TrackSet& tracks);
// [{"frame": k, "pairs": [[[sx, sy], [tx, ty]], ...]}, ...] ordered by frame
std::vector<CorrespondenceSet> read_correspondences(const fs::path& path);
void write_correspondences(const fs::path& path, const std::vector<CorrespondenceSet>& frames);
// {"points": [[x, y, z], ...], "observations": [{"point": i, "frame": k, "pixel": [u, v]}, ...]}
struct ObservationFile {
  std::vector<Eigen::Vector3d> points;
  std::vector<Observation> observations;
};
ObservationFile read_observations(const fs::path& path);
void write_observations(const fs::path& path, const ObservationFile& file);

std::string report_to_json(const MetricReport& report);
std::string loss_to_json(const StepRecord& record);
SceneSpec read_scene_spec(const fs::path& path);
std::string scene_spec_to_json(const SceneSpec& spec);

// Directory layout: frames/%06d.png, depths/%06d.pfm, flows/%06d_%06d.flo,
// masks/%06d.png (optional), intrinsics.json, poses.json,
// poses_smooth.json, gyro.jsonl and points.json (optional).
struct BundlePaths {
  fs::path frames;
  fs::path depths;
  fs::path flows;  // may be empty
  fs::path masks;  // may be empty
  fs::path poses;
  fs::path poses_smooth;  // may be empty
  fs::path intrinsics;
  fs::path gyro;    // may be empty
  fs::path points;  // may be empty
  static BundlePaths in_directory(const fs::path& root);
};

std::string frame_name(int index, const char* extension);
std::string flow_name(int from, int to);

// Validates everything before returning; throws InputError naming the
// offending files and leaves no partial state behind.
VideoBundle load_bundle(const BundlePaths& paths);
void write_bundle(const fs::path& root, const VideoBundle& bundle);

}  // namespace splatstab
