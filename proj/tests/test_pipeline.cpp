#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "surfelmesh/pipeline.hpp"
#include "surfelmesh/synth.hpp"

using namespace sm;
namespace fs = std::filesystem;

namespace {

const std::string& plane_dataset() {
  static const std::string dir = [] {
    fs::path d = fs::temp_directory_path() / "surfelmesh_pipeline_plane";
    fs::remove_all(d);
    SynthConfig c;
    c.scene = "plane";
    c.frames = 10;
    c.width = 80;
    c.height = 60;
    generate_synthetic(c, d.string());
    return d.string();
  }();
  return dir;
}

PolyMesh run(MeshingMode mode, std::uint64_t seed = 0) {
  TumDataset ds = load_tum_dataset(plane_dataset());
  PipelineConfig cfg;
  cfg.meshing_mode = mode;
  cfg.seed = seed;
  return run_dataset(ds, {}, cfg).mesh;
}

}  // namespace

TEST(Config, UnknownKeyAndBadValue) {
  PipelineConfig c;
  EXPECT_THROW(set_config_value(c, "fusion.nope", "1"), ConfigError);
  EXPECT_THROW(set_config_value(c, "fusion.sigma_max", "abc"), ConfigError);
  set_config_value(c, "fusion.sigma_max", "7");
  EXPECT_EQ(c.fusion.sigma_max, 7);
  set_config_value(c, "pipeline.mode", "lockstep");
  EXPECT_EQ(c.meshing_mode, MeshingMode::kLockstep);
  set_config_value(c, "meshing.normal_compat_angle", "45");
  EXPECT_EQ(c.remesh.normal_compat_angle, 45);
  EXPECT_NO_THROW(c.validate());
  set_config_value(c, "association.gamma", "1.5");
  EXPECT_THROW(c.validate(), ConfigError);
  for (const std::string& k : config_keys()) EXPECT_NE(k.find('.'), std::string::npos);
}

TEST(Config, File) {
  fs::path p = fs::temp_directory_path() / "surfelmesh_cfg.txt";
  std::ofstream(p) << "# comment\ndenoise.w_reg = 3\nblend.iterations=5\n";
  PipelineConfig c;
  load_config_file(c, p.string());
  EXPECT_EQ(c.denoise.w_reg, 3);
  EXPECT_EQ(c.blend_iterations, 5);
  std::ofstream(p) << "missing_equals\n";
  PipelineConfig d;
  EXPECT_THROW(load_config_file(d, p.string()), ConfigError);
}

TEST(Pipeline, LockstepDeterministic) {
  PolyMesh a = run(MeshingMode::kLockstep, 3), b = run(MeshingMode::kLockstep, 3);
  EXPECT_GT(a.faces.size(), 0u);
  EXPECT_EQ(ply_bytes(a), ply_bytes(b));
}

TEST(Pipeline, AsyncMatchesLockstepGates) {
  MeshQualityReport l = mesh_quality(run(MeshingMode::kLockstep));
  MeshQualityReport a = mesh_quality(run(MeshingMode::kAsync));
  EXPECT_LE(a.free_pct, 1.0);
  EXPECT_GE(a.manifold_pct, 98.0);
  EXPECT_GE(a.avg_min_angle, 25.0);
  EXPECT_LE(a.self_intersect_pct, 1.0);
  EXPECT_NEAR(a.free_pct, l.free_pct, 1.0);
  EXPECT_NEAR(a.boundary_pct, l.boundary_pct, 1.0);
  EXPECT_NEAR(a.manifold_pct, l.manifold_pct, 1.0);
  EXPECT_NEAR(a.self_intersect_pct, l.self_intersect_pct, 1.0);
  EXPECT_NEAR(a.avg_min_angle, l.avg_min_angle, 1.0);
}

TEST(Pipeline, ZeroFrames) {
  fs::path d = fs::temp_directory_path() / "surfelmesh_empty_ds";
  fs::remove_all(d);
  fs::create_directories(d);
  std::ofstream(d / "associations.txt") << "";
  std::ofstream(d / "groundtruth.txt") << "";
  TumDataset ds = load_tum_dataset(d.string());
  PipelineConfig cfg;
  RunResult r = run_dataset(ds, {}, cfg);
  EXPECT_EQ(r.frames, 0u);
  EXPECT_TRUE(r.mesh.vertices.empty());
  EXPECT_TRUE(r.mesh.faces.empty());
}

TEST(Pipeline, TimingLogAndPublishedMesh) {
  TumDataset ds = load_tum_dataset(plane_dataset());
  PipelineConfig cfg;
  cfg.meshing_mode = MeshingMode::kLockstep;
  cfg.timing_log = (fs::temp_directory_path() / "surfelmesh_timing.csv").string();
  RunResult r = run_dataset(ds, {}, cfg);
  EXPECT_EQ(r.frames, 10u);
  EXPECT_EQ(r.timings.size(), 10u);
  std::ifstream in(cfg.timing_log);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, timing_csv_header());
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += line.empty() ? 0 : 1;
  EXPECT_EQ(rows, 10);

  Pipeline p(cfg, ds.K);
  for (std::size_t i = 0; i < ds.frames.size(); ++i) p.push_frame(load_frame(ds, i));
  p.finish();
  auto pub = p.published();
  ASSERT_TRUE(pub);
  EXPECT_EQ(pub->triangles.size(), p.mesh().triangle_count());
  PolyMesh stripped = p.export_mesh(true);
  EXPECT_LE(stripped.vertices.size(), p.cloud().live_count());
  EXPECT_EQ(stripped.faces.size(), p.export_mesh().faces.size());
}

TEST(Pipeline, DeformationEventAppliedAtFrame) {
  TumDataset ds = load_tum_dataset(plane_dataset());
  PipelineConfig cfg;
  cfg.meshing_mode = MeshingMode::kLockstep;
  Pipeline p(cfg, ds.K);
  for (std::size_t i = 0; i < 6; ++i) p.push_frame(load_frame(ds, i));
  // Surfel 0 exists once the first frame was processed.
  ASSERT_GT(p.frames_processed(), 0);
  const std::int64_t f = p.frames_processed();
  DeformationEvent e;
  e.frame = f;
  e.offsets[0] = Vec3d(0, 0, 0.05);
  Vec3d before = p.cloud()[0].p_bar;
  p.set_deformation_events({e});
  for (std::size_t i = 6; i < ds.frames.size(); ++i) p.push_frame(load_frame(ds, i));
  p.finish();
  // The offset is smoothed over the neighbor graph, so only the sign is known.
  EXPECT_GT(p.cloud()[0].delta_p.z(), 0.0);
  EXPECT_NE(p.cloud()[0].p_bar, before);
}
