// splatstab command line front end.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>

#include "splatstab/error.hpp"
#include "splatstab/io.hpp"
#include "splatstab/metrics.hpp"
#include "splatstab/rolling_shutter.hpp"
#include "splatstab/run_config.hpp"
#include "splatstab/scale_align.hpp"
#include "splatstab/stabilize.hpp"
#include "splatstab/synthetic.hpp"

namespace fs = std::filesystem;
using namespace splatstab;

namespace {

const std::set<std::string> kTuningKeys = {
    "steps",      "views",          "view_window",      "reg_window",        "dilation",     "lambda_ssim",
    "lambda_consistent", "lambda_scale", "lambda_offset", "lr_offset", "lr_scale",     "lr_rot",
    "lr_alpha",   "lr_color",       "optimizer",   "pair_mode",         "compensation", "layers",
    "init_alpha", "init_scale"};

// Flag values of the chosen subcommand, overlaid by the config file.
RunConfig resolve(const CLI::App& global, const CLI::App& sub, const std::string& config_path, bool tuning) {
  RunConfig rc;
  std::set<std::string> known;
  for (const CLI::App* app : {&global, &sub}) {
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      known.insert(name);
      if (opt->count() == 0) continue;
      rc.set(name, opt->get_expected_min() == 0 ? "true" : opt->as<std::string>());
    }
  }
  if (!config_path.empty()) {
    const ConfigMap overrides = read_config(config_path);
    for (const auto& [key, value] : overrides) {
      if (known.count(key) == 0 && !(tuning && kTuningKeys.count(key) > 0)) {
        throw InputError(config_path + ": unknown setting '" + key + "' for " + sub.get_name());
      }
    }
    rc.overlay(overrides);
  }
  if (rc.get_int("threads", 1) < 1) throw InputError("--threads must be at least 1");
  return rc;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text << "\n";
}

std::vector<Image> read_frame_dir(const fs::path& dir) {
  std::vector<Image> frames;
  for (int k = 0;; ++k) {
    const fs::path p = dir / frame_name(k, ".png");
    if (!fs::exists(p)) break;
    frames.push_back(read_png(p));
  }
  if (frames.empty()) throw InputError(dir.string() + ": no frames");
  return frames;
}

std::vector<Mask> read_mask_dir(const fs::path& dir) {
  std::vector<Mask> masks;
  for (int k = 0;; ++k) {
    const fs::path p = dir / frame_name(k, ".png");
    if (!fs::exists(p)) break;
    masks.push_back(read_mask_png(p));
  }
  if (masks.empty()) throw InputError(dir.string() + ": no masks");
  return masks;
}

int run_synth(const RunConfig& rc) {
  const fs::path out = rc.require("out");
  SceneSpec spec;
  if (rc.has("spec")) {
    require_paths_exist({rc.get_string("spec")});
    spec = read_scene_spec(rc.get_string("spec"));
  } else {
    const int w = rc.get_int("width", 64), h = rc.get_int("height", 64), t = rc.get_int("frames", 10);
    const std::uint64_t seed = rc.get_u64("seed", 0);
    spec = rc.get_bool("dynamic", false) ? dynamic_scene_spec(w, h, t, seed) : default_scene_spec(w, h, t, seed);
    spec.trajectory.jitter_translation = rc.get_double("jitter-translation", 0.0);
    spec.trajectory.jitter_rotation_deg = rc.get_double("jitter-rotation", 0.0);
  }
  const VideoBundle bundle = generate(spec);
  write_bundle(out, bundle);
  write_text(out / "spec.json", scene_spec_to_json(spec));
  std::cout << "wrote " << bundle.frame_count() << " frames to " << out.string() << "\n";
  return 0;
}

int run_rs_remove(const RunConfig& rc) {
  const fs::path frames_dir = rc.require("frames"), gyro_path = rc.require("gyro"), k_path = rc.require("intrinsics");
  const fs::path out = rc.require("out");
  require_paths_exist({frames_dir, gyro_path, k_path, rc.get_string("ois")});
  const CameraIntrinsics K = read_intrinsics(k_path);
  const GyroLog gyro = read_gyro(gyro_path);
  const std::vector<Image> frames = read_frame_dir(frames_dir);
  const double fps = rc.get_double("frame-rate", 30.0);
  const double readout = rc.get_double("readout-ms", 0.0) / 1000.0;
  const double t0 = rc.get_double("start-time", 0.0);
  if (!(fps > 0.0) || readout < 0.0) throw InputError("invalid frame rate or readout duration");
  OisLog ois = rc.has("ois") ? read_ois(rc.get_string("ois"))
                             : OisLog::zero(t0, t0 + (frames.size() - 1) / fps + readout);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    RollingShutterConfig cfg;
    cfg.block_size = rc.get_int("block", 32);
    cfg.frame_start = t0 + k / fps;
    cfg.readout_duration = readout;
    const RollingShutterResult r = rs_remove_frame(frames[k], K, gyro, ois, cfg);
    write_png(out / "frames" / frame_name(static_cast<int>(k), ".png"), r.image);
    write_mask_png(out / "masks" / frame_name(static_cast<int>(k), ".png"), r.valid);
  }
  std::cout << "corrected " << frames.size() << " frames\n";
  return 0;
}

int run_align_scale(const RunConfig& rc) {
  const fs::path depths_dir = rc.require("depths"), poses_path = rc.require("poses");
  const fs::path points_path = rc.require("points"), k_path = rc.require("intrinsics"), out = rc.require("out");
  require_paths_exist({depths_dir, poses_path, points_path, k_path});
  const CameraIntrinsics K = read_intrinsics(k_path);
  Trajectory poses = read_poses(poses_path);
  SparsePointSet points = read_points(points_path);
  std::vector<DepthMap> depths;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    depths.push_back(read_pfm(depths_dir / frame_name(static_cast<int>(k), ".pfm")));
  }
  RansacConfig cfg;
  cfg.iterations = rc.get_int("iterations", cfg.iterations);
  cfg.tau = rc.get_double("tau", cfg.tau);
  cfg.seed = rc.get_u64("seed", 0);
  const ScaleAlignment a = align_scale(depths, poses, points, K, cfg);
  apply_global_scale(a.global, poses, points);
  write_poses(out / "poses.json", poses);
  write_points(out / "points.json", points);
  std::string report = "{\n  \"global\": " + std::to_string(a.global) + ",\n  \"per_frame\": [";
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    report += (i ? ", " : "") + std::string("{\"frame\": ") + std::to_string(a.frames[i]) +
              ", \"scale\": " + std::to_string(a.per_frame[i].scale) +
              ", \"inliers\": " + std::to_string(a.per_frame[i].inlier_count) + "}";
  }
  report += "]\n}";
  write_text(out / "scale.json", report);
  std::cout << report << "\n";
  return 0;
}

int run_stabilize(const RunConfig& rc) {
  BundlePaths paths;
  paths.frames = rc.require("frames");
  paths.depths = rc.require("depths");
  paths.flows = rc.get_string("flows");
  paths.masks = rc.get_string("masks");
  paths.poses = rc.require("poses");
  paths.intrinsics = rc.require("intrinsics");
  const fs::path out = rc.require("out");
  require_paths_exist({paths.frames, paths.depths, paths.flows, paths.masks, paths.poses, paths.intrinsics});
  const StabilizeConfig cfg = stabilize_config_from(rc);
  const VideoBundle bundle = load_bundle(paths);
  const StabilizeResult r = stabilize(bundle, cfg);
  for (int k = 0; k < bundle.frame_count(); ++k) {
    write_png(out / "frames" / frame_name(k, ".png"), r.frames[k]);
    write_mask_png(out / "valid" / frame_name(k, ".png"), r.valid[k]);
    if (rc.get_bool("save-scenes", false)) {
      write_scene(out / "scenes" / frame_name(k, ".gavs"), r.scenes[k]);
    }
  }
  write_poses(out / "poses_smooth.json", r.poses_smooth);
  std::ofstream losses(out / "losses.jsonl");
  for (const StepRecord& s : r.history) losses << loss_to_json(s) << "\n";
  std::cout << "stabilized " << bundle.frame_count() << " frames\n";
  return 0;
}

int run_render(const RunConfig& rc) {
  const fs::path scene_path = rc.require("scene"), pose_path = rc.require("pose"), k_path = rc.require("intrinsics");
  const fs::path out = rc.require("out");
  require_paths_exist({scene_path, pose_path, k_path});
  const GaussianScene scene = read_scene(scene_path);
  if (scene.size() == 0) throw InputError(scene_path.string() + ": scene is empty");
  const RenderOutput r = render(scene, read_intrinsics(k_path), read_pose(pose_path));
  write_png(out, r.color);
  return 0;
}

int run_metrics(const RunConfig& rc) {
  const std::string mode = rc.require("mode");
  MetricReport report;
  if (mode == "cr") {
    require_paths_exist({rc.require("masks")});
    report.cropping_ratio = cropping_ratio(read_mask_dir(rc.get_string("masks")));
  } else if (mode == "d") {
    require_paths_exist({rc.require("correspondences")});
    const DistortionResult d = distortion(read_correspondences(rc.get_string("correspondences")));
    report.distortion = d.value;
    report.distortion_per_frame = d.per_frame;
    report.distortion_skipped = d.skipped;
  } else if (mode == "s") {
    require_paths_exist({rc.require("tracks")});
    report.stability = stability(read_tracks(rc.get_string("tracks")));
  } else if (mode == "gcs") {
    require_paths_exist({rc.require("observations"), rc.require("poses"), rc.require("intrinsics")});
    const ObservationFile f = read_observations(rc.get_string("observations"));
    report.gc_sparse = gc_sparse(f.points, f.observations, read_intrinsics(rc.get_string("intrinsics")),
                                 read_poses(rc.get_string("poses")));
  } else if (mode == "gcd") {
    require_paths_exist({rc.require("frames"), rc.require("scenes"), rc.require("poses"), rc.require("intrinsics"),
                         rc.get_string("masks")});
    const std::vector<Image> frames = read_frame_dir(rc.get_string("frames"));
    std::vector<GaussianScene> scenes;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      scenes.push_back(read_scene(fs::path(rc.get_string("scenes")) / frame_name(static_cast<int>(k), ".gavs")));
    }
    const std::vector<Mask> masks = rc.has("masks") ? read_mask_dir(rc.get_string("masks")) : std::vector<Mask>{};
    report.gc_dense = gc_dense(frames, scenes, read_poses(rc.get_string("poses")),
                               read_intrinsics(rc.get_string("intrinsics")), masks);
  } else {
    throw InputError("unknown metrics mode '" + mode + "' (expected cr, d, s, gcs or gcd)");
  }
  const std::string json = report_to_json(report);
  if (rc.has("out")) {
    write_text(rc.get_string("out"), json);
  } else {
    std::cout << json << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-frame video stabilization with per-frame Gaussian splatting"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config;
  app.add_option("--seed", "Random seed")->type_name("UINT");
  app.add_option("--threads", "Worker threads (computation is deterministic and sequential)")->type_name("INT");
  app.add_option("--config", config, "key=value file overriding any flag");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic ground-truth bundle");
  synth->add_option("--spec", "Scene spec JSON");
  synth->add_option("--out", "Output directory");
  synth->add_option("--width", "Frame width without --spec");
  synth->add_option("--height", "Frame height without --spec");
  synth->add_option("--frames", "Frame count without --spec");
  synth->add_flag("--dynamic", "Add a moving object (without --spec)");
  synth->add_option("--jitter-translation", "Per-axis translation jitter in meters (without --spec)");
  synth->add_option("--jitter-rotation", "Per-axis rotation jitter in degrees (without --spec)");

  auto* rs = app.add_subcommand("rs-remove", "Remove rolling shutter and OIS with gyro logs");
  rs->add_option("--frames", "Directory of %06d.png frames");
  rs->add_option("--gyro", "Gyro JSON lines");
  rs->add_option("--ois", "OIS JSON lines (zero when omitted)");
  rs->add_option("--intrinsics", "Intrinsics JSON");
  rs->add_option("--readout-ms", "Readout duration in milliseconds");
  rs->add_option("--frame-rate", "Frames per second");
  rs->add_option("--start-time", "Timestamp of frame 0");
  rs->add_option("--block", "Row block size in pixels");
  rs->add_option("--out", "Output directory");

  auto* align = app.add_subcommand("align-scale", "Align SfM poses and points to the depth scale");
  align->add_option("--depths", "Directory of %06d.pfm depths");
  align->add_option("--poses", "Poses JSON");
  align->add_option("--points", "Sparse points JSON");
  align->add_option("--intrinsics", "Intrinsics JSON");
  align->add_option("--iterations", "RANSAC iterations");
  align->add_option("--tau", "Inlier threshold in log depth");
  align->add_option("--out", "Output directory");

  auto* stab = app.add_subcommand("stabilize", "Stabilize a video bundle");
  stab->add_option("--frames", "Directory of %06d.png frames");
  stab->add_option("--depths", "Directory of %06d.pfm depths");
  stab->add_option("--flows", "Directory of %06d_%06d.flo flows");
  stab->add_option("--poses", "Poses JSON");
  stab->add_option("--intrinsics", "Intrinsics JSON");
  stab->add_option("--masks", "Directory of dynamic masks");
  stab->add_option("--sigma", "Trajectory smoothing sigma in frames (default 4)");
  stab->add_option("--window", "Odd smoothing window in frames, or auto (default)");
  stab->add_option("--pad", "Extrapolation padding in pixels (default 96)");
  stab->add_option("--epochs", "Optimization epochs (default 3)");
  stab->add_flag("--save-scenes", "Also write the optimized scenes");
  stab->add_option("--out", "Output directory");

  auto* rend = app.add_subcommand("render", "Render a scene dump");
  rend->add_option("--scene", "Scene file");
  rend->add_option("--pose", "Pose JSON");
  rend->add_option("--intrinsics", "Intrinsics JSON");
  rend->add_option("--out", "Output PNG");

  auto* met = app.add_subcommand("metrics", "Evaluate stabilization metrics");
  met->add_option("--mode", "cr, d, s, gcs or gcd");
  met->add_option("--masks", "Validity masks (cr) or dynamic masks (gcd)");
  met->add_option("--correspondences", "Correspondence JSON (d)");
  met->add_option("--tracks", "Track JSON (s)");
  met->add_option("--observations", "Points and observations JSON (gcs)");
  met->add_option("--frames", "Frames (gcd)");
  met->add_option("--scenes", "Scene dumps (gcd)");
  met->add_option("--poses", "Poses JSON (gcs, gcd)");
  met->add_option("--intrinsics", "Intrinsics JSON (gcs, gcd)");
  met->add_option("--out", "Report path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const RunConfig rc = resolve(app, *sub, config, name == "stabilize");
    if (name == "synth") return run_synth(rc);
    if (name == "rs-remove") return run_rs_remove(rc);
    if (name == "align-scale") return run_align_scale(rc);
    if (name == "stabilize") return run_stabilize(rc);
    if (name == "render") return run_render(rc);
    return run_metrics(rc);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
