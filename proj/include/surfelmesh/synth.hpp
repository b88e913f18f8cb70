#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "surfelmesh/core.hpp"
#include "surfelmesh/io.hpp"

namespace sm {

struct Primitive {
  enum class Kind { kSphere, kBox, kRect };
  Kind kind = Kind::kSphere;
  Vec3d center = Vec3d::Zero();
  double radius = 0.5;               // sphere
  Vec3d half = Vec3d::Constant(0.3); // box half extents
  // Rectangle spanned by u and v (unit, orthogonal) with normal n = u x v.
  Vec3d u = Vec3d::UnitX(), v = Vec3d::UnitY();
  double half_u = 1, half_v = 1;
  bool one_sided = false;  // rectangle visible only from the side n points to

  Vec3d rect_normal() const { return u.cross(v); }
  double distance(const Vec3d& p) const;
  // Ray o + t*d, t > t_min. Returns t and the outward normal.
  std::optional<std::pair<double, Vec3d>> intersect(const Vec3d& o, const Vec3d& d, double t_min = 1e-9) const;
};

struct SyntheticScene {
  std::string name;
  std::vector<Primitive> primitives;
  double checker_size = 0.1;

  double distance(const Vec3d& p) const;
  std::optional<std::pair<double, Vec3d>> intersect(const Vec3d& o, const Vec3d& d) const;
  Rgb8 albedo(const Vec3d& p) const;
  // Camera trajectory for frame i of n.
  Pose camera_pose(int i, int n) const;

  nlohmann::json to_json() const;
  static SyntheticScene from_json(const nlohmann::json& j);
};

// Named scenes: plane, sphere, box, thin_sheet.
SyntheticScene make_scene(const std::string& name);
SyntheticScene load_scene(const std::string& dir);  // reads scene.json

struct SynthConfig {
  std::string scene = "sphere";
  int frames = 120;
  int width = 160;
  int height = 120;
  double noise_frac = 0.005;  // gaussian sigma as a fraction of depth
  double pose_noise = 0.0;    // translation sigma (m) applied to the recorded trajectory
  std::uint64_t seed = 1;
  double gt_voxel = 0.005;    // spacing of the ground-truth samples
};

struct RenderedFrame {
  DepthImage depth;  // meters, 0 where the ray misses
  ColorImage color;
  std::vector<Vec3d> hits;  // noiseless surface points of valid pixels
};

RenderedFrame render_frame(const SyntheticScene& scene, const Pose& pose, const CameraIntrinsics& K);

struct SyntheticDataset {
  CameraIntrinsics K;
  std::vector<TimedPose> poses;
  std::vector<Vec3d> gt_points;
};

// Writes depth/, rgb/, associations.txt, groundtruth.txt, camera.txt,
// scene.json and gt_points.ply to `out_dir`.
SyntheticDataset generate_synthetic(const SynthConfig& config, const std::string& out_dir);

std::vector<Vec3d> read_point_ply(const std::string& path);

}  // namespace sm
