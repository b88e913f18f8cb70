#include "surfelmesh/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

namespace sm {

namespace fs = std::filesystem;

double Primitive::distance(const Vec3d& p) const {
  switch (kind) {
    case Kind::kSphere:
      return std::abs((p - center).norm() - radius);
    case Kind::kBox: {
      Vec3d q = (p - center).cwiseAbs() - half;
      double outside = q.cwiseMax(0.0).norm();
      double inside = std::min(q.maxCoeff(), 0.0);
      return std::abs(outside + inside);
    }
    case Kind::kRect: {
      Vec3d d = p - center;
      double a = std::clamp(d.dot(u), -half_u, half_u);
      double b = std::clamp(d.dot(v), -half_v, half_v);
      return (d - a * u - b * v).norm();
    }
  }
  return 0;
}

std::optional<std::pair<double, Vec3d>> Primitive::intersect(const Vec3d& o, const Vec3d& d, double t_min) const {
  switch (kind) {
    case Kind::kSphere: {
      Vec3d oc = o - center;
      double a = d.squaredNorm(), b = oc.dot(d), c = oc.squaredNorm() - radius * radius;
      double disc = b * b - a * c;
      if (disc < 0) return std::nullopt;
      double s = std::sqrt(disc);
      for (double t : {(-b - s) / a, (-b + s) / a})
        if (t > t_min) return std::make_pair(t, ((o + t * d) - center).normalized());
      return std::nullopt;
    }
    case Kind::kBox: {
      double t0 = -1e300, t1 = 1e300;
      int axis0 = -1;
      double sign0 = 0;
      for (int k = 0; k < 3; ++k) {
        double lo = center[k] - half[k], hi = center[k] + half[k];
        if (d[k] == 0) {
          if (o[k] < lo || o[k] > hi) return std::nullopt;
          continue;
        }
        double ta = (lo - o[k]) / d[k], tb = (hi - o[k]) / d[k];
        double s = -1;
        if (ta > tb) {
          std::swap(ta, tb);
          s = 1;
        }
        if (ta > t0) {
          t0 = ta;
          axis0 = k;
          sign0 = s;
        }
        t1 = std::min(t1, tb);
      }
      if (t0 > t1 || axis0 < 0 || t0 <= t_min) return std::nullopt;
      Vec3d n = Vec3d::Zero();
      n[axis0] = sign0;
      return std::make_pair(t0, n);
    }
    case Kind::kRect: {
      Vec3d n = rect_normal();
      double dn = d.dot(n);
      if (dn == 0) return std::nullopt;
      if (one_sided && dn > 0) return std::nullopt;
      double t = (center - o).dot(n) / dn;
      if (t <= t_min) return std::nullopt;
      Vec3d q = o + t * d - center;
      if (std::abs(q.dot(u)) > half_u || std::abs(q.dot(v)) > half_v) return std::nullopt;
      return std::make_pair(t, dn < 0 ? n : Vec3d(-n));
    }
  }
  return std::nullopt;
}

double SyntheticScene::distance(const Vec3d& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pr : primitives) best = std::min(best, pr.distance(p));
  return best;
}

std::optional<std::pair<double, Vec3d>> SyntheticScene::intersect(const Vec3d& o, const Vec3d& d) const {
  std::optional<std::pair<double, Vec3d>> best;
  for (const auto& pr : primitives) {
    auto h = pr.intersect(o, d);
    if (h && (!best || h->first < best->first)) best = h;
  }
  return best;
}

Rgb8 SyntheticScene::albedo(const Vec3d& p) const {
  long long k = 0;
  for (int i = 0; i < 3; ++i) k += static_cast<long long>(std::floor(p[i] / checker_size));
  return (k & 1) ? Rgb8{220, 200, 60} : Rgb8{40, 90, 200};
}

Pose SyntheticScene::camera_pose(int i, int n) const {
  const double s = n > 1 ? double(i) / double(n) : 0.0;
  const Vec3d up(0, 0, 1);
  if (name == "plane") {
    Vec3d eye(0.15 * std::sin(2 * M_PI * s), 0.1 * std::sin(4 * M_PI * s), 0.0);
    return Pose::look_at(eye, eye + Vec3d::UnitZ(), Vec3d(0, -1, 0));
  }
  if (name == "thin_sheet") {
    // Sweeps both faces of the sheet in the x = 0 plane.
    double az = 2 * M_PI * s;
    Vec3d eye(1.2 * std::cos(az), 1.2 * std::sin(az), 0.3 * std::sin(4 * M_PI * s));
    return Pose::look_at(eye, Vec3d::Zero(), up);
  }
  // Orbit at 1.5 m around the origin; two azimuth turns with the elevation
  // swinging through both poles' neighborhoods.
  double az = 4 * M_PI * s;
  double el = deg2rad(70.0) * std::sin(2 * M_PI * s);
  Vec3d eye = 1.5 * Vec3d(std::cos(az) * std::cos(el), std::sin(az) * std::cos(el), std::sin(el));
  return Pose::look_at(eye, Vec3d::Zero(), up);
}

nlohmann::json SyntheticScene::to_json() const {
  nlohmann::json prims = nlohmann::json::array();
  auto vec = [](const Vec3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  for (const auto& p : primitives) {
    nlohmann::json j;
    switch (p.kind) {
      case Primitive::Kind::kSphere:
        j = {{"type", "sphere"}, {"center", vec(p.center)}, {"radius", p.radius}};
        break;
      case Primitive::Kind::kBox:
        j = {{"type", "box"}, {"center", vec(p.center)}, {"half", vec(p.half)}};
        break;
      case Primitive::Kind::kRect:
        j = {{"type", "rect"},        {"center", vec(p.center)}, {"u", vec(p.u)},
             {"v", vec(p.v)},         {"half_u", p.half_u},      {"half_v", p.half_v},
             {"one_sided", p.one_sided}};
        break;
    }
    prims.push_back(j);
  }
  return {{"scene", name}, {"checker_size", checker_size}, {"primitives", prims}};
}

SyntheticScene SyntheticScene::from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) { return Vec3d(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()); };
  SyntheticScene s;
  s.name = j.at("scene").get<std::string>();
  s.checker_size = j.value("checker_size", 0.1);
  for (const auto& pj : j.at("primitives")) {
    Primitive p;
    std::string type = pj.at("type").get<std::string>();
    p.center = vec(pj.at("center"));
    if (type == "sphere") {
      p.kind = Primitive::Kind::kSphere;
      p.radius = pj.at("radius").get<double>();
    } else if (type == "box") {
      p.kind = Primitive::Kind::kBox;
      p.half = vec(pj.at("half"));
    } else if (type == "rect") {
      p.kind = Primitive::Kind::kRect;
      p.u = vec(pj.at("u"));
      p.v = vec(pj.at("v"));
      p.half_u = pj.at("half_u").get<double>();
      p.half_v = pj.at("half_v").get<double>();
      p.one_sided = pj.value("one_sided", false);
    } else {
      throw std::runtime_error("unknown primitive type " + type);
    }
    s.primitives.push_back(p);
  }
  return s;
}

SyntheticScene make_scene(const std::string& name) {
  SyntheticScene s;
  s.name = name;
  if (name == "plane") {
    Primitive p;
    p.kind = Primitive::Kind::kRect;
    p.center = Vec3d(0, 0, 1);
    p.u = Vec3d::UnitX();
    p.v = -Vec3d::UnitY();  // normal -z, toward the camera
    p.half_u = p.half_v = 1.5;
    s.primitives.push_back(p);
  } else if (name == "sphere") {
    Primitive p;
    p.kind = Primitive::Kind::kSphere;
    p.radius = 0.5;
    s.primitives.push_back(p);
  } else if (name == "box") {
    Primitive p;
    p.kind = Primitive::Kind::kBox;
    p.half = Vec3d(0.35, 0.3, 0.25);
    s.primitives.push_back(p);
  } else if (name == "thin_sheet") {
    // Two coincident one-sided rectangles with opposite normals (+x and -x).
    Primitive a;
    a.kind = Primitive::Kind::kRect;
    a.u = Vec3d::UnitY();
    a.v = Vec3d::UnitZ();
    a.half_u = 0.4;
    a.half_v = 0.3;
    a.one_sided = true;
    Primitive b = a;
    b.u = Vec3d::UnitZ();
    b.v = Vec3d::UnitY();
    b.half_u = 0.3;
    b.half_v = 0.4;
    s.primitives.push_back(a);
    s.primitives.push_back(b);
  } else {
    throw std::invalid_argument("unknown scene: " + name);
  }
  return s;
}

SyntheticScene load_scene(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "scene.json");
  if (!in) throw std::runtime_error("cannot open scene.json in " + dir);
  return SyntheticScene::from_json(nlohmann::json::parse(in));
}

RenderedFrame render_frame(const SyntheticScene& scene, const Pose& pose, const CameraIntrinsics& K) {
  RenderedFrame f;
  f.depth = DepthImage(K.width, K.height, 0.0);
  f.color = ColorImage(K.width, K.height, Rgb8{0, 0, 0});
  const Vec3d o = pose.center();
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      // Camera ray with unit z, so the hit parameter is the depth.
      Vec3d dc((x + 0.5 - K.cx) / K.fx, (y + 0.5 - K.cy) / K.fy, 1.0);
      Vec3d d = pose.rotate_to_world(dc);
      auto h = scene.intersect(o, d);
      if (!h) continue;
      Vec3d p = o + h->first * d;
      f.depth(x, y) = h->first;
      f.color(x, y) = scene.albedo(p);
      f.hits.push_back(p);
    }
  }
  return f;
}

namespace {

void write_points_ply(const std::string& path, const std::vector<Vec3d>& pts) {
  PolyMesh m;
  m.vertices = pts;
  write_ply(path, m);
}

}  // namespace

std::vector<Vec3d> read_point_ply(const std::string& path) { return read_ply(path).vertices; }

SyntheticDataset generate_synthetic(const SynthConfig& cfg, const std::string& out_dir) {
  if (cfg.frames < 0 || cfg.width <= 0 || cfg.height <= 0 || cfg.noise_frac < 0)
    throw std::invalid_argument("invalid synthetic configuration");
  SyntheticScene scene = make_scene(cfg.scene);
  SyntheticDataset ds;
  ds.K = CameraIntrinsics::centered(cfg.width, cfg.height);
  const fs::path root(out_dir);
  fs::create_directories(root / "depth");
  fs::create_directories(root / "rgb");
  write_camera_file((root / "camera.txt").string(), ds.K);
  {
    std::ofstream js(root / "scene.json");
    js << scene.to_json().dump(2) << "\n";
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::ofstream assoc(root / "associations.txt");
  std::set<std::array<long long, 3>> gt_keys;
  char name[64];
  for (int i = 0; i < cfg.frames; ++i) {
    const double t = 1.0 + i / 30.0;
    Pose pose = scene.camera_pose(i, cfg.frames);
    RenderedFrame f = render_frame(scene, pose, ds.K);
    Image<std::uint16_t> raw(cfg.width, cfg.height, 0);
    for (std::size_t k = 0; k < raw.size(); ++k) {
      double z = f.depth.data[k];
      if (z <= 0) continue;
      double noisy = z + cfg.noise_frac * z * gauss(rng);
      double q = std::round(noisy * ds.K.depth_scale);
      raw.data[k] = static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
    }
    std::snprintf(name, sizeof name, "%.6f.png", t);
    write_png_u16((root / "depth" / name).string(), raw);
    write_png_rgb((root / "rgb" / name).string(), f.color);
    char line[256];
    std::snprintf(line, sizeof line, "%.6f rgb/%s %.6f depth/%s\n", t, name, t, name);
    assoc << line;
    TimedPose tp{t, pose};
    if (cfg.pose_noise > 0)
      tp.pose.translation += cfg.pose_noise * Vec3d(gauss(rng), gauss(rng), gauss(rng));
    ds.poses.push_back(tp);
    for (const Vec3d& p : f.hits) {
      std::array<long long, 3> key{static_cast<long long>(std::floor(p.x() / cfg.gt_voxel)),
                                   static_cast<long long>(std::floor(p.y() / cfg.gt_voxel)),
                                   static_cast<long long>(std::floor(p.z() / cfg.gt_voxel))};
      if (gt_keys.insert(key).second) ds.gt_points.push_back(p);
    }
  }
  write_tum_trajectory((root / "groundtruth.txt").string(), ds.poses);
  write_points_ply((root / "gt_points.ply").string(), ds.gt_points);
  return ds;
}

}  // namespace sm
