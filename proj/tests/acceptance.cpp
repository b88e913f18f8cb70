// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <map>
#include <memory>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "surfelmesh/blend.hpp"
#include "surfelmesh/config.hpp"
#include "surfelmesh/denoise.hpp"
#include "surfelmesh/fusion.hpp"
#include "surfelmesh/io.hpp"
#include "surfelmesh/metrics.hpp"
#include "surfelmesh/mesher.hpp"
#include "surfelmesh/octree.hpp"
#include "surfelmesh/remesher.hpp"
#include "surfelmesh/pipeline.hpp"
#include "surfelmesh/preprocess.hpp"
#include "surfelmesh/synth.hpp"

using namespace sm;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------- 1
void criterion1() {
  bool ok = true;
  std::string why;
  const double tol = 1e-12;
  // Fusion running average.
  {
    FusionConfig cfg;
    Surfel s;
    s.p = Vec3d(0.1, -0.2, 1.3);
    s.n = Vec3d(0, 0, -1);
    s.c = Vec3d(0.2, 0.4, 0.6);
    s.sigma = 2.0;
    s.r = 0.02;
    Measurement m{Vec3d(0.13, -0.17, 1.25), Vec3d(0.1, 0, -1).normalized(), Vec3d(0.8, 0.1, 0.3), 0.015};
    const double w = 0.5;
    Surfel a = s;
    integrate_measurement(a, m, w, 7, cfg);
    Vec3d p_ref = (s.sigma * s.p + w * m.p) / (s.sigma + w);
    Vec3d c_ref = (s.sigma * s.c + w * m.c) / (s.sigma + w);
    Vec3d n_ref = ((s.sigma * s.n + w * m.n) / (s.sigma + w)).normalized();
    if ((a.p - p_ref).norm() > tol || (a.c - c_ref).norm() > tol || (a.n - n_ref).norm() > tol) {
      ok = false;
      why += " f-update";
    }
    if (std::abs(a.sigma - 2.5) > tol || a.t != 7) {
      ok = false;
      why += " sigma-sum";
    }
    // Confidence cap at 5.
    Surfel b = s;
    b.sigma = 4.6;
    integrate_measurement(b, m, 1.0, 8, cfg);
    Surfel c = s;
    c.sigma = 5.0;
    integrate_measurement(c, m, 1.0, 8, cfg);
    if (std::abs(b.sigma - 5.0) > tol || std::abs(c.sigma - 5.0) > tol) {
      ok = false;
      why += " sigma-cap";
    }
  }
  // Radius on a fronto-parallel plane: 1.5 * sqrt(2) * z / f.
  {
    CameraIntrinsics K = CameraIntrinsics::centered(64, 48);
    const double z = 1.7;
    DepthFrame f;
    f.depth = DepthImage(64, 48, z);
    f.valid = MaskImage(64, 48, 1);
    compute_normals_and_radii(f, K, 85.0);
    double worst = 0;
    for (int y = 5; y < 43; ++y)
      for (int x = 5; x < 59; ++x)
        worst = std::max(worst, std::abs(f.radius(x, y) - 1.5 * std::sqrt(2.0) * z / K.fx));
    if (worst > tol) {
      ok = false;
      why += fmt(" radius(err %.3g)", worst);
    }
  }
  // Step size of isolated surfels.
  {
    SurfelCloud cloud;
    for (int i = 0; i < 3; ++i) {
      Surfel s;
      s.p = s.p_bar = Vec3d(i, 0, 0);
      s.r = 0.01;
      cloud.add(s);
    }
    DenoiseConfig dc;
    auto st = step_sizes(cloud, dc);
    for (double v : st)
      if (std::abs(v - 0.5 / (1.0 + dc.w_reg)) > tol) {
        ok = false;
        why += " step";
        break;
      }
  }
  report(1, ok, ok ? "fusion average, sigma cap 5, plane radius, isolated step size exact to 1e-12" : "failed:" + why);
}

// ---------------------------------------------------------------- 2
// Independent transcription of the boundary blending pseudocode.
void oracle_blend(DepthImage& D, const DepthImage& SD, int i_count) {
  const int w = D.width, h = D.height;
  std::vector<int> Id(w * h, -1), Is(w * h, -1);
  std::vector<double> dd(w * h, 0.0), ds(w * h, 0.0);
  auto at = [w](int x, int y) { return y * w + x; };
  auto inside = [w, h](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int p = at(x, y);
      if (!(D.data[p] != 0 && SD.data[p] != 0)) continue;
      double d = SD.data[p] - D.data[p];
      for (int oy = -1; oy <= 1; ++oy)
        for (int ox = -1; ox <= 1; ++ox) {
          if (!ox && !oy) continue;
          if (!inside(x + ox, y + oy)) continue;
          int q = at(x + ox, y + oy);
          if (Id[p] == -1 && D.data[q] == 0) {
            dd[p] = d;
            Id[p] = 0;
            D.data[p] = SD.data[p];
          }
          if (Is[p] == -1 && SD.data[q] == 0) {
            ds[p] = d;
            Is[p] = 0;
          }
        }
    }
  auto update = [&](int i, int x, int y, std::vector<double>& delta, std::vector<int>& I) {
    double sum = 0;
    int count = 0;
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) {
        if (!ox && !oy) continue;
        if (!inside(x + ox, y + oy)) continue;
        int q = at(x + ox, y + oy);
        if (I[q] == i - 1) {
          sum += delta[q];
          count += 1;
        }
      }
    if (count > 0) {
      int p = at(x, y);
      I[p] = i;
      delta[p] = sum / count;
      D.data[p] += (1.0 - static_cast<double>(i) / i_count) * (sum / count);
    }
  };
  for (int i = 1; i <= i_count - 1; ++i)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int p = at(x, y);
        if (D.data[p] == 0) continue;
        if (SD.data[p] != 0 && Id[p] == -1) update(i, x, y, dd, Id);
        if (SD.data[p] == 0 && Is[p] == -1) update(i, x, y, ds, Is);
      }
}

void criterion2() {
  bool ok = true;
  std::string why;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  std::bernoulli_distribution hole(0.15);
  int cases = 0;
  // Random 16x16 images with holes in both buffers.
  for (int t = 0; t < 50; ++t) {
    DepthImage D(16, 16), SD(16, 16);
    for (auto& v : D.data) v = hole(rng) ? 0.0 : U(rng);
    for (auto& v : SD.data) v = hole(rng) ? 0.0 : U(rng);
    DepthImage A = D, B = D;
    blend_boundaries(A, SD, 10);
    oracle_blend(B, SD, 10);
    ++cases;
    if (std::memcmp(A.data.data(), B.data.data(), A.data.size() * sizeof(double)) != 0) {
      ok = false;
      why = fmt("random case %d differs", t);
      break;
    }
  }
  // Linear ramp strip: measurements everywhere, surfels only on the left,
  // constant offset delta between them. Rings to the right of the surfel
  // boundary receive delta * (1 - i / 10).
  {
    const double base = 1.0, delta = 0.1;
    DepthImage D(16, 16, base), SD(16, 16, 0.0);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 4; ++x) SD(x, y) = base + delta;
    DepthImage A = D, B = D;
    blend_boundaries(A, SD, 10);
    oracle_blend(B, SD, 10);
    ++cases;
    if (std::memcmp(A.data.data(), B.data.data(), A.data.size() * sizeof(double)) != 0) {
      ok = false;
      why += " ramp differs from oracle";
    }
    for (int x = 4; x < 16 && ok; ++x) {
      int i = x - 3;
      double expected = i <= 9 ? base + (1.0 - i / 10.0) * delta : base;
      for (int y = 0; y < 16; ++y)
        if (A(x, y) != expected) {
          ok = false;
          why += fmt(" ramp value at x=%d: %.17g vs %.17g", x, A(x, y), expected);
          break;
        }
    }
  }
  report(2, ok, ok ? fmt("%d crafted 16x16 cases bit-identical to the pseudocode oracle; ramp step delta/10", cases)
                   : "failed:" + why);
}

// ---------------------------------------------------------------- 3
SurfelCloud random_cloud(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> U(-0.1, 0.1);
  SurfelCloud cloud;
  for (int i = 0; i < n; ++i) {
    Surfel s;
    s.p = Vec3d(U(rng), U(rng), 0.01 * N(rng));
    s.p_bar = s.p + 0.005 * Vec3d(N(rng), N(rng), N(rng));
    s.n = (Vec3d(0, 0, 1) + 0.2 * Vec3d(N(rng), N(rng), N(rng))).normalized();
    s.r = 0.05;
    cloud.add(s);
  }
  // Up to four nearest neighbors.
  for (SurfelId i = 0; i < SurfelId(n); ++i) {
    std::vector<std::pair<double, SurfelId>> d;
    for (SurfelId j = 0; j < SurfelId(n); ++j)
      if (j != i) d.emplace_back((cloud[i].p - cloud[j].p).norm(), j);
    std::sort(d.begin(), d.end());
    int k = 1 + int(rng() % 4);
    for (int m = 0; m < k; ++m) cloud[i].neighbors[cloud[i].neighbor_count++] = d[m].second;
  }
  return cloud;
}

void criterion3() {
  std::mt19937_64 rng(7);
  DenoiseConfig dc;
  double worst_rel = 0;
  bool monotone = true;
  for (int c = 0; c < 20; ++c) {
    SurfelCloud cloud = random_cloud(rng, 50);
    auto g = cost_gradient(cloud, dc);
    double num = 0, den = 0;
    const double h = 1e-6;
    for (SurfelId i = 0; i < 50; ++i)
      for (int k = 0; k < 3; ++k) {
        SurfelCloud a = cloud, b = cloud;
        a[i].p_bar[k] += h;
        b[i].p_bar[k] -= h;
        double fd = (cost(a, dc) - cost(b, dc)) / (2 * h);
        num += (g[i][k] - fd) * (g[i][k] - fd);
        den += fd * fd;
      }
    worst_rel = std::max(worst_rel, std::sqrt(num / den));
    double prev = cost(cloud, dc);
    for (int it = 0; it < 100; ++it) {
      denoise_iteration(cloud, 0, dc);
      double cur = cost(cloud, dc);
      if (cur > prev) monotone = false;
      prev = cur;
    }
  }
  bool ok = worst_rel <= 1e-4 && monotone;
  report(3, ok, fmt("max relative gradient error %.3g (<= 1e-4), cost non-increasing over 100 iterations: %s",
                    worst_rel, monotone ? "yes" : "no"));
}

// ---------------------------------------------------------------- 4
SurfelCloud grid_plane(int nx, int ny, double h, double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0, 1);
  SurfelCloud cloud;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      Surfel s;
      s.p = Vec3d(x * h, y * h, 1.0 + noise * N(rng));
      s.p_bar = s.p;
      s.n = Vec3d(0, 0, 1);
      s.r = 1.5 * std::sqrt(2.0) * h;
      cloud.add(s);
    }
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      Surfel& s = cloud[SurfelId(y * nx + x)];
      const int off[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (const auto& o : off) {
        int qx = x + o[0], qy = y + o[1];
        if (qx < 0 || qy < 0 || qx >= nx || qy >= ny) continue;
        s.neighbors[s.neighbor_count++] = SurfelId(qy * nx + qx);
      }
    }
  return cloud;
}

void criterion4() {
  std::mt19937_64 rng(11);
  DenoiseConfig dc;
  SurfelCloud clean = grid_plane(60, 60, 0.005, 0.0, rng);
  SurfelCloud ref = clean;
  for (int it = 0; it < 100; ++it) denoise_iteration(clean, 0, dc);
  bool exact = true;
  for (SurfelId i = 0; i < clean.capacity(); ++i)
    if (clean[i].p_bar != ref[i].p) exact = false;

  SurfelCloud noisy = grid_plane(60, 60, 0.005, 0.002, rng);
  for (int it = 0; it < 100; ++it) denoise_iteration(noisy, 0, dc);
  double raw = 0, den = 0;
  for (SurfelId i = 0; i < noisy.capacity(); ++i) {
    raw += std::pow(noisy[i].p.z() - 1.0, 2);
    den += std::pow(noisy[i].p_bar.z() - 1.0, 2);
  }
  raw = std::sqrt(raw / noisy.capacity());
  den = std::sqrt(den / noisy.capacity());
  double reduction = 1.0 - den / raw;
  bool ok = exact && reduction >= 0.30;
  report(4, ok, fmt("noise-free plane p_bar == p exactly: %s; noisy plane RMS %.3f mm -> %.3f mm (%.1f%% reduction, need >= 30%%)",
                    exact ? "yes" : "no", raw * 1e3, den * 1e3, reduction * 100));
}

// ---------------------------------------------------------------- 5
void criterion5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> R(0.01, 0.3);
  CompressedOctree tree(16);
  std::vector<Vec3d> pos;
  std::vector<std::uint8_t> in;
  std::vector<SurfelId> present;
  std::string inv;
  std::size_t ops = 0, queries = 0, mismatches = 0;
  auto check = [&] {
    ++ops;
    if (inv.empty()) inv = tree.check_invariants();
  };
  auto random_point = [&] {
    // Mix of uniform points and tight clusters.
    if (rng() % 4 == 0) return Vec3d(0.3 + 1e-4 * U(rng), -0.2 + 1e-4 * U(rng), 0.1 + 1e-4 * U(rng));
    return Vec3d(U(rng), U(rng), U(rng));
  };
  for (SurfelId id = 0; id < 10000; ++id) {
    pos.push_back(random_point());
    in.push_back(1);
    tree.insert(id, pos.back());
    check();
  }
  std::vector<OctreeHit> hits;
  while (queries < 1000) {
    int op = int(rng() % 4);
    SurfelId id = SurfelId(rng() % pos.size());
    if (op == 0) {
      if (in[id]) {
        Vec3d np = (rng() % 2) ? Vec3d(pos[id] + 0.05 * Vec3d(U(rng), U(rng), U(rng))) : Vec3d(3 * Vec3d(U(rng), U(rng), U(rng)));
        pos[id] = np;
        tree.notify_moved(id, np);
      } else {
        pos[id] = random_point();
        in[id] = 1;
        tree.insert(id, pos[id]);
      }
      check();
    } else if (op == 1) {
      if (in[id]) {
        tree.remove(id);
        in[id] = 0;
        check();
      }
    } else {
      Vec3d c = (rng() % 3 == 0 && in[id]) ? pos[id] : Vec3d(U(rng), U(rng), U(rng));
      double r = R(rng);
      tree.radius_search(c, r, hits);
      check();
      std::set<SurfelId> got, want;
      for (const auto& h : hits) got.insert(h.id);
      for (SurfelId k = 0; k < pos.size(); ++k)
        if (in[k] && (pos[k] - c).norm() <= r) want.insert(k);
      if (got != want) ++mismatches;
      ++queries;
    }
  }
  bool ok = mismatches == 0 && inv.empty();
  report(5, ok, fmt("%zu radius queries over 10000 surfels, %zu mismatches vs brute force; invariants after %zu operations: %s",
                    queries, mismatches, ops, inv.empty() ? "ok" : inv.c_str()));
}

// ---------------------------------------------------------------- shared runs
struct SceneRun {
  std::string dir;
  SyntheticScene scene;
  std::vector<Vec3d> gt;
  std::unique_ptr<Pipeline> pipe;
  PolyMesh mesh;
};

SceneRun run_scene(const std::string& workdir, const std::string& name, int frames, int w, int h, double noise,
                   MeshingMode mode = MeshingMode::kLockstep) {
  SceneRun r;
  r.dir = (fs::path(workdir) / fmt("%s_%dx%d_%d", name.c_str(), w, h, frames)).string();
  SynthConfig sc;
  sc.scene = name;
  sc.frames = frames;
  sc.width = w;
  sc.height = h;
  sc.noise_frac = noise;
  sc.seed = 1;
  fs::remove_all(r.dir);
  SyntheticDataset sd = generate_synthetic(sc, r.dir);
  r.scene = load_scene(r.dir);
  r.gt = sd.gt_points;
  TumDataset ds = load_tum_dataset(r.dir);
  PipelineConfig cfg;
  cfg.meshing_mode = mode;
  r.pipe = std::make_unique<Pipeline>(cfg, ds.K);
  for (std::size_t i = 0; i < ds.frames.size(); ++i) r.pipe->push_frame(load_frame(ds, i));
  r.pipe->finish();
  r.mesh = r.pipe->export_mesh();
  return r;
}

struct Gates {
  bool ok;
  std::string text;
};

Gates quality_gates(const MeshQualityReport& q) {
  bool ok = q.free_pct <= 1.0 && q.manifold_pct >= 98.0 && q.avg_min_angle >= 25.0 && q.self_intersect_pct <= 1.0;
  return {ok, fmt("free %.3f%% (<=1), manifold %.3f%% (>=98), angle %.2f deg (>=25), intersect %.3f%% (<=1)",
                  q.free_pct, q.manifold_pct, q.avg_min_angle, q.self_intersect_pct)};
}

// ---------------------------------------------------------------- 6
void criterion6(SceneRun& sphere) {
  MeshQualityReport q = mesh_quality(sphere.mesh);
  ReconEvalReport e = accuracy_completeness(
      sphere.mesh.vertices, sphere.gt, [&](const Vec3d& p) { return sphere.scene.distance(p); }, 0.01);
  Gates g = quality_gates(q);
  bool ok = g.ok && e.accuracy_pct >= 95.0 && e.completeness_pct >= 85.0;
  report(6, ok, g.text + fmt("; accuracy %.2f%% (>=95), completeness %.2f%% (>=85) at 1 cm; %zu vertices, %zu triangles",
                             e.accuracy_pct, e.completeness_pct, q.vertices, q.triangles));
}

// ---------------------------------------------------------------- 7
void criterion7(SceneRun& sphere) {
  MeshQualityReport inc = mesh_quality(sphere.mesh);
  SurfelSnapshot snap = make_snapshot(sphere.pipe->cloud(), 0, false);
  CompressedOctree tree;
  TriangleMesh scratch;
  mesh_from_scratch(snap, tree, scratch, sphere.pipe->config().meshing);
  PolyMesh sm_mesh;
  std::vector<std::int64_t> idx(snap.capacity(), -1);
  for (SurfelId id = 0; id < snap.capacity(); ++id)
    if (snap.live[id]) {
      idx[id] = std::int64_t(sm_mesh.vertices.size());
      sm_mesh.vertices.push_back(snap.p[id]);
    }
  for (const Triangle& t : scratch.triangles())
    sm_mesh.faces.push_back({std::uint32_t(idx[t.v[0]]), std::uint32_t(idx[t.v[1]]), std::uint32_t(idx[t.v[2]])});
  MeshQualityReport scr = mesh_quality(sm_mesh);
  double d_free = std::abs(inc.free_pct - scr.free_pct), d_bdry = std::abs(inc.boundary_pct - scr.boundary_pct);
  double d_man = std::abs(inc.manifold_pct - scr.manifold_pct), d_si = std::abs(inc.self_intersect_pct - scr.self_intersect_pct);
  double d_ang = std::abs(inc.avg_min_angle - scr.avg_min_angle);
  // Curvature is not a percentage; its difference is taken relative to the
  // from-scratch value and held to the same 1 point.
  double d_crv = 100.0 * std::abs(inc.mean_curvature - scr.mean_curvature) / scr.mean_curvature;
  bool ok = d_free <= 1 && d_bdry <= 1 && d_man <= 1 && d_si <= 1 && d_ang <= 1 && d_crv <= 1;
  report(7, ok, fmt("|delta| free %.3f, bdry %.3f, manif %.3f, intsc %.3f pt (<=1); angle %.3f deg (<=1); "
                    "crv %.2f vs %.2f, %.2f%% (<=1)",
                    d_free, d_bdry, d_man, d_si, d_ang, inc.mean_curvature, scr.mean_curvature, d_crv));
}

// ---------------------------------------------------------------- 8
void criterion8() {
  // Converged 100k-surfel cloud on a gently curved height field.
  const int n = 317;
  const double h = 0.01;
  SurfelCloud cloud;
  auto height = [](double x, double y) { return 0.05 * std::sin(2.0 * x) * std::cos(1.5 * y); };
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double px = x * h, py = y * h;
      Surfel s;
      s.p = s.p_bar = Vec3d(px, py, height(px, py));
      Vec3d gx(1, 0, 0.1 * std::cos(2.0 * px) * std::cos(1.5 * py));
      Vec3d gy(0, 1, -0.075 * std::sin(2.0 * px) * std::sin(1.5 * py));
      s.n = gx.cross(gy).normalized();
      s.r = 1.5 * std::sqrt(2.0) * h;
      cloud.add(s);
    }
  MeshingConfig mc;
  RemeshConfig rc;
  CompressedOctree tree;
  TriangleMesh mesh;
  SurfelSnapshot snap0 = make_snapshot(cloud, 0);
  double t0 = now_s();
  mesh_from_scratch(snap0, tree, mesh, mc);
  double t_scratch = now_s() - t0;

  // Static converged scene: no motion, no deletions.
  SurfelSnapshot snap_static = make_snapshot(cloud, 1);
  sync_octree(snap_static, tree);
  RemeshResult rs = remesh_pass(snap_static, tree, mesh, rc);
  double static_frac = rs.stats.deletion_fraction();

  // One local edit: a surfel near the center moves by half a spacing
  // along the surface and a new surfel appears next to it.
  SurfelId edited = SurfelId((n / 2) * n + n / 2);
  cloud[edited].p_bar += Vec3d(0.5 * h, 0.3 * h, 0);
  cloud[edited].p_bar.z() = height(cloud[edited].p_bar.x(), cloud[edited].p_bar.y());
  cloud.mark_moved(edited);
  Surfel extra = cloud[edited];
  extra.p_bar = extra.p = cloud[SurfelId((n / 2 + 5) * n + n / 2 + 5)].p_bar + Vec3d(0.4 * h, 0.45 * h, 0);
  extra.p_bar.z() = extra.p.z() = height(extra.p.x(), extra.p.y());
  cloud.add(extra);

  double t1 = now_s();
  SurfelSnapshot snap = make_snapshot(cloud, 2);
  sync_octree(snap, tree);
  RemeshResult rr = remesh_pass(snap, tree, mesh, rc);
  MeshingQueue q = build_queue(snap, mesh, rr.scheduled);
  run_meshing_iteration(q, snap, tree, mesh, mc);
  double t_inc = now_s() - t1;
  double speedup = t_scratch / std::max(t_inc, 1e-9);
  bool ok = speedup >= 5.0 && static_frac == 0.0;
  report(8, ok, fmt("%zu surfels: from scratch %.3f s, incremental %.5f s (%.0fx, need >= 5x); static deletion fraction %.2f%%, edit deletion fraction %.4f%% (%zu of %zu)",
                    cloud.live_count(), t_scratch, t_inc, speedup, 100 * static_frac,
                    100 * rr.stats.deletion_fraction(), rr.stats.deleted, rr.stats.triangles_before));
}

// ---------------------------------------------------------------- 9
void criterion9(const std::string& workdir) {
  SceneRun r = run_scene(workdir, "thin_sheet", 120, 160, 120, 0.005);
  const PolyMesh& m = r.mesh;
  const SurfelCloud& cloud = r.pipe->cloud();
  std::vector<Vec3d> normals;
  for (SurfelId id = 0; id < cloud.capacity(); ++id)
    if (cloud.live(id)) normals.push_back(cloud[id].n);
  std::size_t cross = 0, plus_tris = 0, minus_tris = 0;
  for (const auto& f : m.faces) {
    int pos = 0, neg = 0;
    for (std::uint32_t v : f) (normals[v].x() > 0 ? pos : neg)++;
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        if (normals[f[a]].dot(normals[f[b]]) < 0) {
          ++cross;
          a = b = 3;
        }
    if (pos == 3) ++plus_tris;
    if (neg == 3) ++minus_tris;
  }
  std::size_t plus = 0, minus = 0, plus_ref = 0, minus_ref = 0;
  std::vector<std::uint8_t> ref(m.vertices.size(), 0);
  for (const auto& f : m.faces)
    for (std::uint32_t v : f) ref[v] = 1;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (normals[v].x() > 0) {
      ++plus;
      plus_ref += ref[v];
    } else {
      ++minus;
      minus_ref += ref[v];
    }
  }
  double cov_p = plus ? double(plus_ref) / plus : 0, cov_m = minus ? double(minus_ref) / minus : 0;
  bool ok = cross == 0 && plus_tris > 0 && minus_tris > 0 && cov_p >= 0.9 && cov_m >= 0.9;
  report(9, ok, fmt("+x side: %zu surfels, %zu triangles, %.1f%% meshed; -x side: %zu surfels, %zu triangles, %.1f%% meshed; %zu triangles joining opposite normals (need 0)",
                    plus, plus_tris, 100 * cov_p, minus, minus_tris, 100 * cov_m, cross));
}

// ---------------------------------------------------------------- 10
void criterion10(SceneRun& sphere) {
  Pipeline& p = *sphere.pipe;
  using Face = std::array<std::uint32_t, 3>;
  // Rigid translation of every surfel.
  const Vec3d T(0.12, -0.07, 0.05);
  PolyMesh before = p.export_mesh();
  std::map<SurfelId, Vec3d> offsets;
  for (SurfelId id = 0; id < p.cloud().capacity(); ++id)
    if (p.cloud().live(id)) offsets[id] = T;
  p.apply_deformation_now(offsets);
  MeshingIterationStats rigid = p.mesh_iteration();
  PolyMesh after = p.export_mesh();
  bool exact = before.vertices.size() == after.vertices.size();
  for (std::size_t i = 0; exact && i < before.vertices.size(); ++i)
    if (after.vertices[i] != Vec3d(before.vertices[i] + T)) exact = false;
  std::set<Face> fb(before.faces.begin(), before.faces.end()), fa(after.faces.begin(), after.faces.end());
  std::size_t lost = 0;
  for (const Face& f : fb) lost += fa.count(f) ? 0 : 1;
  std::size_t added = fa.size() + lost - fb.size();
  bool rigid_ok = exact && lost == 0 && rigid.remesh.deleted == 0;

  // Shear of the upper cap along x, growing with height above z0.
  const double z0 = T.z() + 0.2;
  offsets.clear();
  for (SurfelId id = 0; id < p.cloud().capacity(); ++id) {
    if (!p.cloud().live(id)) continue;
    double z = p.cloud()[id].p_bar.z();
    offsets[id] = Vec3d(z > z0 ? 1.5 * (z - z0) : 0.0, 0, 0);
  }
  p.apply_deformation_now(offsets);
  MeshingIterationStats shear = p.mesh_iteration();
  // Surfels aborted in the first pass get their retry.
  p.mesh_iteration();
  PolyMesh post = p.export_mesh();
  // Triangles well below the sheared cap must be kept.
  std::set<Face> fp(post.faces.begin(), post.faces.end());
  std::size_t far = 0, far_kept = 0;
  for (const Face& f : fa) {
    bool below = true;
    for (std::uint32_t v : f) below = below && after.vertices[v].z() < z0 - 0.3;
    if (!below) continue;
    ++far;
    far_kept += fp.count(f);
  }
  MeshQualityReport q = mesh_quality(post);
  Gates g = quality_gates(q);
  double frac = shear.remesh.deletion_fraction();
  bool local = shear.remesh.deleted > 0 && frac < 0.5 && far > 0 && far_kept == far;
  bool ok = rigid_ok && local && g.ok;
  report(10, ok, fmt("rigid: vertex-exact %s, deletions %zu, faces lost %zu (added %zu at re-queued front surfels); "
                     "shear: deleted %zu of %zu triangles (%.2f%%), far-region triangles kept %zu/%zu; post-event ",
                     exact ? "yes" : "no", rigid.remesh.deleted, lost, added, shear.remesh.deleted,
                     shear.remesh.triangles_before, 100 * frac, far_kept, far) + g.text);
}

// ---------------------------------------------------------------- 11
void criterion11(SceneRun& hi, const std::string& workdir) {
  SceneRun lo = run_scene(workdir, "sphere", 120, 80, 60, 0.005);
  auto stats = [](const SurfelCloud& c) {
    double r = 0;
    std::size_t n = 0;
    for (SurfelId id = 0; id < c.capacity(); ++id)
      if (c.live(id)) {
        r += c[id].r;
        ++n;
      }
    return std::make_pair(n, r / std::max<std::size_t>(n, 1));
  };
  auto [nh, rh] = stats(hi.pipe->cloud());
  auto [nl, rl] = stats(lo.pipe->cloud());
  double count_ratio = double(nh) / double(nl), radius_ratio = rl / rh;
  bool ok = std::abs(count_ratio - 4.0) <= 0.6 && std::abs(radius_ratio - 2.0) <= 0.3;
  report(11, ok, fmt("surfels 160x120: %zu, 80x60: %zu, ratio %.3f (4 +- 15%%); mean radius %.2f mm vs %.2f mm, ratio %.3f (2 +- 15%%)",
                     nh, nl, count_ratio, rh * 1e3, rl * 1e3, radius_ratio));
}

// ---------------------------------------------------------------- 12
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion12(const std::string& workdir) {
  std::string a_path = (fs::path(workdir) / "det_a.ply").string(), b_path = (fs::path(workdir) / "det_b.ply").string();
  std::string c_path = (fs::path(workdir) / "det_c.ply").string();
  SceneRun a = run_scene(workdir, "sphere", 40, 160, 120, 0.005);
  write_ply(a_path, a.mesh);
  a.pipe.reset();
  SceneRun b = run_scene(workdir, "sphere", 40, 160, 120, 0.005);
  write_ply(b_path, b.mesh);
  bool identical = slurp(a_path) == slurp(b_path);
  PolyMesh r = read_ply(a_path);
  write_ply(c_path, r);
  bool roundtrip = slurp(a_path) == slurp(c_path);
  bool ok = identical && roundtrip && !a.mesh.faces.empty();
  report(12, ok, fmt("two lockstep runs byte-identical: %s (%zu bytes, %zu faces); PLY write-read-write byte-identical: %s",
                     identical ? "yes" : "no", slurp(a_path).size(), a.mesh.faces.size(), roundtrip ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  std::string workdir = (fs::temp_directory_path() / "surfelmesh_acceptance").string();
  std::set<int> only;  // --only 7,10 runs a subset
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--workdir") workdir = argv[i + 1];
    if (std::string(argv[i]) == "--only") {
      std::stringstream ss(argv[i + 1]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    }
  }
  auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
  fs::create_directories(workdir);
  try {
    if (want(1)) criterion1();
    if (want(2)) criterion2();
    if (want(3)) criterion3();
    if (want(4)) criterion4();
    if (want(5)) criterion5();
    if (want(6) || want(7) || want(10) || want(11)) {
      SceneRun sphere = run_scene(workdir, "sphere", 120, 160, 120, 0.005);
      if (want(6)) criterion6(sphere);
      if (want(7)) criterion7(sphere);
      if (want(11)) criterion11(sphere, workdir);
      // Mutates the sphere run, so it goes last.
      if (want(10)) criterion10(sphere);
    }
    if (want(8)) criterion8();
    if (want(9)) criterion9(workdir);
    if (want(12)) criterion12(workdir);
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
