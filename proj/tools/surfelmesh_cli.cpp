#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "surfelmesh/config.hpp"
#include "surfelmesh/io.hpp"
#include "surfelmesh/metrics.hpp"
#include "surfelmesh/pipeline.hpp"
#include "surfelmesh/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReconstructArgs {
  std::string dataset, trajectory, deform, out, config_file, timing;
  bool lockstep = false;
  bool strip_free = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  bool no_cutoff = false, no_bilateral = false, no_temporal = false, no_erosion = false;
};

int reconstruct(const ReconstructArgs& a) {
  sm::PipelineConfig cfg;
  try {
    if (!a.config_file.empty()) sm::load_config_file(cfg, a.config_file);
    for (const std::string& kv : a.overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw sm::ConfigError("--set expects key=value, got " + kv);
      sm::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (a.lockstep) cfg.meshing_mode = sm::MeshingMode::kLockstep;
    if (a.seed) cfg.seed = *a.seed;
    if (!a.timing.empty()) cfg.timing_log = a.timing;
    if (a.strip_free) cfg.strip_free = true;
    if (a.no_cutoff) cfg.preprocess.enable_cutoff = false;
    if (a.no_bilateral) cfg.preprocess.enable_bilateral = false;
    if (a.no_temporal) cfg.preprocess.enable_temporal = false;
    if (a.no_erosion) cfg.preprocess.enable_erosion = false;
    cfg.validate();
  } catch (const sm::ConfigError& e) {
    throw UsageError(e.what());
  }
  sm::TumDataset ds = sm::load_tum_dataset(a.dataset, a.trajectory);
  if (ds.skipped_without_pose)
    std::fprintf(stderr, "skipped %zu frames without a pose within 20 ms\n", ds.skipped_without_pose);
  std::vector<sm::DeformationEvent> events;
  if (!a.deform.empty()) events = sm::load_deformation_events(a.deform);
  sm::RunResult r = sm::run_dataset(ds, events, cfg);
  sm::write_ply(a.out, r.mesh);
  std::printf("frames=%zu vertices=%zu triangles=%zu\n", r.frames, r.mesh.vertices.size(), r.mesh.faces.size());
  return kExitOk;
}

int synth(const std::string& scene, int frames, const std::string& size, double noise, std::uint64_t seed,
          const std::string& out) {
  sm::SynthConfig cfg;
  cfg.scene = scene;
  cfg.frames = frames;
  cfg.noise_frac = noise;
  cfg.seed = seed;
  int w = 0, h = 0;
  char x = 0;
  if (std::sscanf(size.c_str(), "%d%c%d", &w, &x, &h) != 3 || (x != 'x' && x != 'X') || w <= 0 || h <= 0)
    throw UsageError("--size expects WxH, got " + size);
  cfg.width = w;
  cfg.height = h;
  try {
    sm::make_scene(scene);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (frames < 0 || noise < 0) throw UsageError("--frames and --noise must be non-negative");
  sm::SyntheticDataset ds = sm::generate_synthetic(cfg, out);
  std::printf("frames=%d gt_points=%zu\n", frames, ds.gt_points.size());
  return kExitOk;
}

int eval_mesh(const std::string& mesh_path, const std::string& report) {
  sm::PolyMesh m = sm::read_ply(mesh_path);
  sm::MeshQualityReport q = sm::mesh_quality(m);
  std::string kv = sm::to_key_value(q);
  std::fputs(kv.c_str(), stdout);
  if (!report.empty()) sm::write_report(report, kv, sm::to_json(q));
  return kExitOk;
}

int eval_recon(const std::string& mesh_path, const std::string& scene_dir, double tau, bool sweep,
               const std::string& report) {
  if (!(tau >= 0)) throw UsageError("--tau must be non-negative");
  sm::PolyMesh m = sm::read_ply(mesh_path);
  sm::SyntheticScene scene = sm::load_scene(scene_dir);
  std::vector<sm::Vec3d> gt = sm::read_point_ply((std::filesystem::path(scene_dir) / "gt_points.ply").string());
  std::vector<double> taus;
  if (sweep)
    for (int k = 1; k <= 20; ++k) taus.push_back(0.0025 * k);
  sm::ReconEvalReport r = sm::accuracy_completeness(
      m.vertices, gt, [&](const sm::Vec3d& p) { return scene.distance(p); }, tau, taus);
  std::string kv = sm::to_key_value(r);
  std::fputs(kv.c_str(), stdout);
  if (sweep) {
    std::printf("# tau accuracy_pct completeness_pct\n");
    for (const auto& p : r.curve) std::printf("%.4f %.3f %.3f\n", p.tau, p.accuracy_pct, p.completeness_pct);
  }
  if (!report.empty()) sm::write_report(report, kv, sm::to_json(r));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surfel reconstruction and incremental meshing"};
  app.require_subcommand(1);

  ReconstructArgs ra;
  auto* rec = app.add_subcommand("reconstruct", "Fuse an RGB-D dataset and mesh it");
  rec->add_option("--dataset", ra.dataset, "TUM-layout dataset directory")->required();
  rec->add_option("--trajectory", ra.trajectory, "Trajectory file (TUM format)");
  rec->add_option("--deform", ra.deform, "Deformation event file");
  rec->add_option("--out", ra.out, "Output PLY")->required();
  rec->add_flag("--lockstep", ra.lockstep, "Mesh synchronously after every frame");
  rec->add_option("--seed", ra.seed, "Random seed");
  rec->add_option("--config", ra.config_file, "key=value configuration file");
  rec->add_option("--timing", ra.timing, "Per-frame timing CSV");
  rec->add_option("--set", ra.overrides, "Override a configuration key (key=value)");
  rec->add_flag("--strip-free", ra.strip_free, "Drop unreferenced vertices");
  rec->add_flag("--no-cutoff", ra.no_cutoff, "Disable the depth cutoff");
  rec->add_flag("--no-bilateral", ra.no_bilateral, "Disable bilateral filtering");
  rec->add_flag("--no-temporal", ra.no_temporal, "Disable the temporal outlier filter");
  rec->add_flag("--no-erosion", ra.no_erosion, "Disable erosion near invalid pixels");

  std::string scene = "sphere", size = "160x120", synth_out;
  int frames = 120;
  double noise = 0.005;
  std::uint64_t seed = 1;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic RGB-D dataset");
  syn->add_option("--scene", scene, "plane, sphere, box or thin_sheet");
  syn->add_option("--frames", frames, "Number of frames");
  syn->add_option("--size", size, "Image size WxH");
  syn->add_option("--noise", noise, "Depth noise sigma as a fraction of depth");
  syn->add_option("--seed", seed, "Random seed");
  syn->add_option("--out", synth_out, "Output directory")->required();

  std::string mesh_path, report;
  auto* em = app.add_subcommand("eval-mesh", "Mesh quality metrics");
  em->add_option("--mesh", mesh_path, "PLY mesh")->required();
  em->add_option("--report", report, "Report file (key=value; JSON alongside)");

  std::string scene_dir, recon_report;
  double tau = 0.01;
  bool sweep = false;
  auto* er = app.add_subcommand("eval-recon", "Accuracy and completeness against a synthetic scene");
  er->add_option("--mesh", mesh_path, "PLY mesh")->required();
  er->add_option("--scene", scene_dir, "Synthetic dataset directory")->required();
  er->add_option("--tau", tau, "Evaluation threshold in meters");
  er->add_flag("--sweep", sweep, "Print a threshold sweep");
  er->add_option("--report", recon_report, "Report file (key=value; JSON alongside)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (rec->parsed()) return reconstruct(ra);
    if (syn->parsed()) return synth(scene, frames, size, noise, seed, synth_out);
    if (em->parsed()) return eval_mesh(mesh_path, report);
    if (er->parsed()) return eval_recon(mesh_path, scene_dir, tau, sweep, recon_report);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
