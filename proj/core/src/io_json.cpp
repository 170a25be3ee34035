#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "splatstab/error.hpp"
#include "splatstab/io.hpp"

namespace splatstab {
namespace {

using nlohmann::json;

json parse_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void dump_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

template <typename F>
auto guarded(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j) {
  if (!j.is_array() || j.size() != N) throw InputError("expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = j.at(i).get<double>();
  return v;
}

template <typename V>
json arr(const V& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Pose pose_from(const json& e) {
  const Eigen::Vector4d q = vec<4>(e.at("q"));
  if (q.norm() < 1e-12) throw InputError("zero rotation quaternion");
  Pose p;
  p.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
  p.translation = vec<3>(e.at("t"));
  return p;
}

json pose_to(const Pose& p, int frame) {
  return {{"frame", frame},
          {"q", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
          {"t", arr(p.translation)}};
}

std::vector<json> json_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_lines(const fs::path& path, const std::vector<json>& lines) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const json& j : lines) out << j.dump() << "\n";
}

TextureSpec texture_from(const json& j, const TextureSpec& def) {
  TextureSpec t = def;
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "noise") {
      t.kind = TextureKind::kValueNoise;
    } else if (k == "checker") {
      t.kind = TextureKind::kChecker;
    } else {
      throw InputError("unknown texture kind " + k);
    }
  }
  t.cell = j.value("cell", t.cell);
  t.seed = j.value("seed", t.seed);
  t.octaves = j.value("octaves", t.octaves);
  return t;
}

json texture_to(const TextureSpec& t) {
  return {{"kind", t.kind == TextureKind::kChecker ? "checker" : "noise"},
          {"cell", t.cell},
          {"seed", t.seed},
          {"octaves", t.octaves}};
}

json intrinsics_to(const CameraIntrinsics& K) {
  return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

CameraIntrinsics intrinsics_from(const json& j) {
  CameraIntrinsics K{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                     j.at("cy").get<double>(), j.at("width").get<int>(),    j.at("height").get<int>()};
  K.validate();
  return K;
}

}  // namespace

CameraIntrinsics read_intrinsics(const fs::path& path) {
  return guarded(path, [&] { return intrinsics_from(parse_json(path)); });
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& K) { dump_json(path, intrinsics_to(K)); }

Trajectory read_poses(const fs::path& path) {
  return guarded(path, [&] {
    const json j = parse_json(path);
    if (!j.is_array()) throw InputError(path.string() + ": expected a list of poses");
    Trajectory out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const json& e = j[i];
      if (e.contains("frame") && e.at("frame").get<long long>() != static_cast<long long>(i)) {
        throw InputError(path.string() + ": non-contiguous frames (expected frame " + std::to_string(i) + ", got " +
                         std::to_string(e.at("frame").get<long long>()) + ")");
      }
      out.push_back(pose_from(e));
    }
    return out;
  });
}

void write_poses(const fs::path& path, const Trajectory& poses) {
  json j = json::array();
  for (std::size_t i = 0; i < poses.size(); ++i) j.push_back(pose_to(poses[i], static_cast<int>(i)));
  dump_json(path, j);
}

Pose read_pose(const fs::path& path) {
  return guarded(path, [&] {
    const json j = parse_json(path);
    if (j.is_array()) {
      if (j.empty()) throw InputError(path.string() + ": empty pose list");
      return pose_from(j.front());
    }
    return pose_from(j);
  });
}

GyroLog read_gyro(const fs::path& path) {
  return guarded(path, [&] {
    GyroLog log;
    for (const json& e : json_lines(path)) {
      const Eigen::Vector4d q = vec<4>(e.at("q"));
      log.samples.push_back({e.at("t").get<double>(), Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized()});
    }
    log.validate();
    return log;
  });
}

void write_gyro(const fs::path& path, const GyroLog& log) {
  std::vector<json> lines;
  for (const GyroSample& s : log.samples) {
    lines.push_back({{"t", s.t}, {"q", {s.rotation.w(), s.rotation.x(), s.rotation.y(), s.rotation.z()}}});
  }
  write_lines(path, lines);
}

OisLog read_ois(const fs::path& path) {
  return guarded(path, [&] {
    OisLog log;
    for (const json& e : json_lines(path)) log.samples.push_back({e.at("t").get<double>(), {e.at("dx").get<double>(), e.at("dy").get<double>()}});
    log.validate();
    return log;
  });
}

void write_ois(const fs::path& path, const OisLog& log) {
  std::vector<json> lines;
  for (const OisSample& s : log.samples) lines.push_back({{"t", s.t}, {"dx", s.offset.x()}, {"dy", s.offset.y()}});
  write_lines(path, lines);
}

SparsePointSet read_points(const fs::path& path) {
  return guarded(path, [&] {
    const json j = parse_json(path);
    SparsePointSet sp;
    for (const json& p : j.at("points")) sp.points.push_back(vec<3>(p));
    if (j.contains("visibility")) {
      for (const auto& [key, ids] : j.at("visibility").items()) {
        sp.visibility[std::stoi(key)] = ids.get<std::vector<int>>();
      }
    }
    sp.validate();
    return sp;
  });
}

void write_points(const fs::path& path, const SparsePointSet& sp) {
  json pts = json::array();
  for (const auto& p : sp.points) pts.push_back(arr(p));
  json vis = json::object();
  for (const auto& [frame, ids] : sp.visibility) vis[std::to_string(frame)] = ids;
  dump_json(path, {{"points", pts}, {"visibility", vis}});
}

TrackSet read_tracks(const fs::path& path) {
  return guarded(path, [&] {
    TrackSet out;
    for (const json& t : parse_json(path)) {
      Track track;
      for (const json& p : t.at("points")) {
        if (p.is_null()) {
          track.points.emplace_back(std::nullopt);
        } else {
          track.points.emplace_back(vec<2>(p));
        }
      }
      out.push_back(std::move(track));
    }
    return out;
  });
}

void write_tracks(const fs::path& path, const TrackSet& tracks) {
  json j = json::array();
  for (const Track& t : tracks) {
    json pts = json::array();
    for (const auto& p : t.points) pts.push_back(p ? arr(*p) : json(nullptr));
    j.push_back({{"points", pts}});
  }
  dump_json(path, j);
}

std::vector<CorrespondenceSet> read_correspondences(const fs::path& path) {
  return guarded(path, [&] {
    std::vector<CorrespondenceSet> out;
    for (const json& f : parse_json(path)) {
      CorrespondenceSet set;
      for (const json& p : f.at("pairs")) set.emplace_back(vec<2>(p.at(0)), vec<2>(p.at(1)));
      out.push_back(std::move(set));
    }
    return out;
  });
}

void write_correspondences(const fs::path& path, const std::vector<CorrespondenceSet>& frames) {
  json j = json::array();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    json pairs = json::array();
    for (const auto& [a, b] : frames[f]) pairs.push_back({arr(a), arr(b)});
    j.push_back({{"frame", f}, {"pairs", pairs}});
  }
  dump_json(path, j);
}

ObservationFile read_observations(const fs::path& path) {
  return guarded(path, [&] {
    const json j = parse_json(path);
    ObservationFile f;
    for (const json& p : j.at("points")) f.points.push_back(vec<3>(p));
    for (const json& o : j.at("observations")) {
      f.observations.push_back({o.at("point").get<int>(), o.at("frame").get<int>(), vec<2>(o.at("pixel"))});
    }
    return f;
  });
}

void write_observations(const fs::path& path, const ObservationFile& f) {
  json pts = json::array();
  for (const auto& p : f.points) pts.push_back(arr(p));
  json obs = json::array();
  for (const Observation& o : f.observations) {
    obs.push_back({{"point", o.point}, {"frame", o.frame}, {"pixel", arr(o.pixel)}});
  }
  dump_json(path, {{"points", pts}, {"observations", obs}});
}

std::string report_to_json(const MetricReport& r) {
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = std::isfinite(*v) ? json(*v) : json(nullptr);
  };
  put("cropping_ratio", r.cropping_ratio);
  put("distortion", r.distortion);
  put("stability", r.stability);
  put("gc_sparse", r.gc_sparse);
  put("gc_dense", r.gc_dense);
  if (!r.distortion_per_frame.empty()) {
    json per = json::array();
    for (double d : r.distortion_per_frame) per.push_back(std::isfinite(d) ? json(d) : json(nullptr));
    j["distortion_per_frame"] = per;
    j["distortion_skipped"] = r.distortion_skipped;
  }
  return j.dump(2);
}

std::string loss_to_json(const StepRecord& r) {
  return json{{"frame", r.frame},
              {"epoch", r.epoch},
              {"step", r.step},
              {"rgb", r.loss.rgb},
              {"consistent", r.loss.consistent},
              {"scale", r.loss.scale},
              {"offset", r.loss.offset},
              {"total", r.loss.total}}
      .dump();
}

SceneSpec read_scene_spec(const fs::path& path) {
  return guarded(path, [&] {
    const json j = parse_json(path);
    const int w = j.value("width", 64), h = j.value("height", 64);
    SceneSpec spec = default_scene_spec(w, h, j.value("frames", 10), j.value("seed", std::uint64_t{0}));
    if (j.contains("camera")) spec.camera = intrinsics_from(j.at("camera"));
    spec.frame_rate = j.value("frame_rate", spec.frame_rate);
    spec.flow_window = j.value("flow_window", spec.flow_window);
    spec.sparse_points = j.value("sparse_points", spec.sparse_points);
    spec.gyro_rate_factor = j.value("gyro_rate_factor", spec.gyro_rate_factor);
    if (j.contains("planes")) {
      spec.planes.clear();
      for (const json& p : j.at("planes")) {
        PlaneSpec ps;
        ps.point = vec<3>(p.at("point"));
        ps.normal = vec<3>(p.at("normal"));
        if (p.contains("u_axis")) ps.u_axis = vec<3>(p.at("u_axis"));
        ps.half_u = p.value("half_u", 0.0);
        ps.half_v = p.value("half_v", 0.0);
        if (p.contains("texture")) ps.texture = texture_from(p.at("texture"), ps.texture);
        spec.planes.push_back(ps);
      }
    }
    if (j.contains("object") && !j.at("object").is_null()) {
      const json& o = j.at("object");
      ObjectSpec os;
      const std::string kind = o.value("kind", std::string("square"));
      if (kind == "square") {
        os.kind = ObjectKind::kSquare;
      } else if (kind == "cylinder") {
        os.kind = ObjectKind::kCylinder;
      } else {
        throw InputError("unknown object kind " + kind);
      }
      if (o.contains("center")) os.center = vec<3>(o.at("center"));
      if (o.contains("velocity")) os.velocity = vec<3>(o.at("velocity"));
      os.size = o.value("size", os.size);
      os.half_height = o.value("half_height", os.half_height);
      if (o.contains("texture")) os.texture = texture_from(o.at("texture"), os.texture);
      spec.object = os;
    }
    if (j.contains("trajectory")) {
      const json& t = j.at("trajectory");
      TrajectorySpec& ts = spec.trajectory;
      if (t.contains("start")) ts.start = vec<3>(t.at("start"));
      if (t.contains("velocity")) ts.velocity = vec<3>(t.at("velocity"));
      ts.yaw_rate_deg = t.value("yaw_rate_deg", ts.yaw_rate_deg);
      ts.jitter_translation = t.value("jitter_translation", ts.jitter_translation);
      ts.jitter_rotation_deg = t.value("jitter_rotation_deg", ts.jitter_rotation_deg);
      ts.jitter_lowpass_sigma = t.value("jitter_lowpass_sigma", ts.jitter_lowpass_sigma);
      ts.seed = t.value("seed", ts.seed);
    }
    spec.validate();
    return spec;
  });
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json planes = json::array();
  for (const PlaneSpec& p : spec.planes) {
    planes.push_back({{"point", arr(p.point)},
                      {"normal", arr(p.normal)},
                      {"u_axis", arr(p.u_axis)},
                      {"half_u", p.half_u},
                      {"half_v", p.half_v},
                      {"texture", texture_to(p.texture)}});
  }
  const TrajectorySpec& t = spec.trajectory;
  json j = {{"camera", intrinsics_to(spec.camera)},
            {"frames", spec.frames},
            {"frame_rate", spec.frame_rate},
            {"flow_window", spec.flow_window},
            {"sparse_points", spec.sparse_points},
            {"gyro_rate_factor", spec.gyro_rate_factor},
            {"planes", planes},
            {"trajectory",
             {{"start", arr(t.start)},
              {"velocity", arr(t.velocity)},
              {"yaw_rate_deg", t.yaw_rate_deg},
              {"jitter_translation", t.jitter_translation},
              {"jitter_rotation_deg", t.jitter_rotation_deg},
              {"jitter_lowpass_sigma", t.jitter_lowpass_sigma},
              {"seed", t.seed}}}};
  if (spec.object) {
    const ObjectSpec& o = *spec.object;
    j["object"] = {{"kind", o.kind == ObjectKind::kSquare ? "square" : "cylinder"},
                   {"center", arr(o.center)},
                   {"velocity", arr(o.velocity)},
                   {"size", o.size},
                   {"half_height", o.half_height},
                   {"texture", texture_to(o.texture)}};
  }
  return j.dump(2);
}

}  // namespace splatstab
