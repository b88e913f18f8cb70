#include "surfelmesh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "surfelmesh/octree.hpp"

namespace sm {

PolyMesh merge_coincident_vertices(const PolyMesh& mesh) {
  PolyMesh out;
  std::map<std::array<double, 3>, std::uint32_t> index;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3d& p = mesh.vertices[i];
    auto [it, inserted] = index.emplace(std::array<double, 3>{p.x(), p.y(), p.z()},
                                        static_cast<std::uint32_t>(out.vertices.size()));
    if (inserted) {
      out.vertices.push_back(p);
      if (!mesh.colors.empty()) out.colors.push_back(mesh.colors[i]);
    }
    remap[i] = it->second;
  }
  for (const auto& f : mesh.faces) {
    std::array<std::uint32_t, 3> g{remap[f[0]], remap[f[1]], remap[f[2]]};
    if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) continue;
    out.faces.push_back(g);
  }
  return out;
}

namespace {

using Edge = std::uint64_t;
Edge edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (Edge(a) << 32) | b;
}

std::vector<std::vector<std::uint32_t>> incidence(const PolyMesh& m) {
  std::vector<std::vector<std::uint32_t>> inc(m.vertices.size());
  for (std::uint32_t f = 0; f < m.faces.size(); ++f)
    for (std::uint32_t v : m.faces[f]) inc[v].push_back(f);
  return inc;
}

// Single edge-connected fan with consistent winding: the opposite edges of
// the incident faces form one directed path or cycle.
bool vertex_manifold(std::uint32_t v, const PolyMesh& m, const std::vector<std::uint32_t>& faces) {
  std::unordered_map<std::uint32_t, std::uint32_t> next;
  std::unordered_map<std::uint32_t, int> indeg;
  for (std::uint32_t f : faces) {
    const auto& t = m.faces[f];
    int k = t[0] == v ? 0 : (t[1] == v ? 1 : 2);
    std::uint32_t a = t[(k + 1) % 3], b = t[(k + 2) % 3];
    if (next.count(a)) return false;
    if (++indeg[b] > 1) return false;
    next[a] = b;
  }
  std::uint32_t start = next.begin()->first;
  for (const auto& [a, b] : next)
    if (!indeg.count(a)) {
      start = a;
      break;
    }
  std::size_t steps = 0;
  std::uint32_t cur = start;
  while (true) {
    auto it = next.find(cur);
    if (it == next.end()) break;
    ++steps;
    cur = it->second;
    if (cur == start) break;
    if (steps > faces.size()) return false;
  }
  return steps == faces.size();
}

double orient3d(const Vec3d& a, const Vec3d& b, const Vec3d& c, const Vec3d& d) {
  return (b - a).cross(c - a).dot(d - a);
}

int sgn(double x) { return (x > 0) - (x < 0); }

double orient2d(const Vec2d& a, const Vec2d& b, const Vec2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool segments_intersect_2d(const Vec2d& a, const Vec2d& b, const Vec2d& c, const Vec2d& d) {
  int o1 = sgn(orient2d(a, b, c)), o2 = sgn(orient2d(a, b, d));
  int o3 = sgn(orient2d(c, d, a)), o4 = sgn(orient2d(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  auto on_seg = [](const Vec2d& p, const Vec2d& q, const Vec2d& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  if (o1 == 0 && on_seg(a, b, c)) return true;
  if (o2 == 0 && on_seg(a, b, d)) return true;
  if (o3 == 0 && on_seg(c, d, a)) return true;
  if (o4 == 0 && on_seg(c, d, b)) return true;
  return false;
}

bool point_in_triangle_2d(const Vec2d& p, const Vec2d& a, const Vec2d& b, const Vec2d& c) {
  int s1 = sgn(orient2d(a, b, p)), s2 = sgn(orient2d(b, c, p)), s3 = sgn(orient2d(c, a, p));
  bool has_neg = s1 < 0 || s2 < 0 || s3 < 0, has_pos = s1 > 0 || s2 > 0 || s3 > 0;
  return !(has_neg && has_pos);
}

struct Projector {
  int drop;
  Vec2d operator()(const Vec3d& p) const {
    if (drop == 0) return Vec2d(p.y(), p.z());
    if (drop == 1) return Vec2d(p.x(), p.z());
    return Vec2d(p.x(), p.y());
  }
};

Projector dominant_projector(const Vec3d& n) {
  Vec3d a = n.cwiseAbs();
  int d = 0;
  if (a.y() > a[d]) d = 1;
  if (a.z() > a[d]) d = 2;
  return Projector{d};
}

bool coplanar_triangles_intersect(const Vec3d* P, const Vec3d* Q, const Projector& pr) {
  Vec2d p[3], q[3];
  for (int i = 0; i < 3; ++i) {
    p[i] = pr(P[i]);
    q[i] = pr(Q[i]);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (segments_intersect_2d(p[i], p[(i + 1) % 3], q[j], q[(j + 1) % 3])) return true;
  return point_in_triangle_2d(p[0], q[0], q[1], q[2]) || point_in_triangle_2d(q[0], p[0], p[1], p[2]);
}

bool segment_hits_triangle(const Vec3d& a, const Vec3d& b, const Vec3d* T) {
  int sa = sgn(orient3d(T[0], T[1], T[2], a)), sb = sgn(orient3d(T[0], T[1], T[2], b));
  if (sa == sb && sa != 0) return false;
  if (sa == 0 && sb == 0) {
    Projector pr = dominant_projector((T[1] - T[0]).cross(T[2] - T[0]));
    Vec2d A = pr(a), B = pr(b), t0 = pr(T[0]), t1 = pr(T[1]), t2 = pr(T[2]);
    return segments_intersect_2d(A, B, t0, t1) || segments_intersect_2d(A, B, t1, t2) ||
           segments_intersect_2d(A, B, t2, t0) || point_in_triangle_2d(A, t0, t1, t2);
  }
  int s0 = sgn(orient3d(a, b, T[0], T[1]));
  int s1 = sgn(orient3d(a, b, T[1], T[2]));
  int s2 = sgn(orient3d(a, b, T[2], T[0]));
  bool has_neg = s0 < 0 || s1 < 0 || s2 < 0, has_pos = s0 > 0 || s1 > 0 || s2 > 0;
  return !(has_neg && has_pos);
}

}  // namespace

bool triangles_intersect(const Vec3d& p0, const Vec3d& p1, const Vec3d& p2, const Vec3d& q0,
                         const Vec3d& q1, const Vec3d& q2) {
  const Vec3d P[3] = {p0, p1, p2}, Q[3] = {q0, q1, q2};
  int dq[3], dp[3];
  for (int i = 0; i < 3; ++i) dq[i] = sgn(orient3d(p0, p1, p2, Q[i]));
  if (dq[0] == dq[1] && dq[1] == dq[2] && dq[0] != 0) return false;
  for (int i = 0; i < 3; ++i) dp[i] = sgn(orient3d(q0, q1, q2, P[i]));
  if (dp[0] == dp[1] && dp[1] == dp[2] && dp[0] != 0) return false;
  if (dq[0] == 0 && dq[1] == 0 && dq[2] == 0) {
    Vec3d n = (p1 - p0).cross(p2 - p0);
    if (n.squaredNorm() == 0) n = (q1 - q0).cross(q2 - q0);
    return coplanar_triangles_intersect(P, Q, dominant_projector(n));
  }
  for (int i = 0; i < 3; ++i) {
    if (segment_hits_triangle(P[i], P[(i + 1) % 3], Q)) return true;
    if (segment_hits_triangle(Q[i], Q[(i + 1) % 3], P)) return true;
  }
  return false;
}

std::vector<std::uint8_t> self_intersecting_faces(const PolyMesh& m) {
  const std::size_t F = m.faces.size();
  std::vector<std::uint8_t> flag(F, 0);
  if (F < 2) return flag;
  std::vector<Eigen::AlignedBox3d> box(F);
  Eigen::AlignedBox3d all;
  double diag = 0;
  for (std::size_t f = 0; f < F; ++f) {
    for (std::uint32_t v : m.faces[f]) box[f].extend(m.vertices[v]);
    all.extend(box[f]);
    diag += box[f].diagonal().norm();
  }
  double cell = std::max(diag / F, 1e-12);
  Vec3d ext = all.diagonal() / cell;
  // Keep the grid size bounded for very spread-out inputs.
  while (ext.x() * ext.y() * ext.z() > 8.0 * F + 1e3) {
    cell *= 2;
    ext = all.diagonal() / cell;
  }
  auto key = [&](const Vec3d& p) {
    Vec3d c = ((p - all.min()) / cell).array().floor();
    return Eigen::Vector3i(int(c.x()), int(c.y()), int(c.z()));
  };
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grid;
  auto hash = [](int x, int y, int z) {
    return (std::uint64_t(std::uint32_t(x)) << 42) ^ (std::uint64_t(std::uint32_t(y)) << 21) ^
           std::uint64_t(std::uint32_t(z));
  };
  for (std::uint32_t f = 0; f < F; ++f) {
    Eigen::Vector3i lo = key(box[f].min()), hi = key(box[f].max());
    for (int x = lo.x(); x <= hi.x(); ++x)
      for (int y = lo.y(); y <= hi.y(); ++y)
        for (int z = lo.z(); z <= hi.z(); ++z) grid[hash(x, y, z)].push_back(f);
  }
  const std::int64_t nF = static_cast<std::int64_t>(F);
#pragma omp parallel
  {
    std::vector<std::uint32_t> cand;
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t fi = 0; fi < nF; ++fi) {
      const std::uint32_t f = static_cast<std::uint32_t>(fi);
      cand.clear();
      Eigen::Vector3i lo = key(box[f].min()), hi = key(box[f].max());
      for (int x = lo.x(); x <= hi.x(); ++x)
        for (int y = lo.y(); y <= hi.y(); ++y)
          for (int z = lo.z(); z <= hi.z(); ++z) {
            auto it = grid.find(hash(x, y, z));
            if (it != grid.end()) cand.insert(cand.end(), it->second.begin(), it->second.end());
          }
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      const auto& a = m.faces[f];
      for (std::uint32_t g : cand) {
        if (g == f) continue;
        const auto& b = m.faces[g];
        bool shared = false;
        for (std::uint32_t u : a)
          for (std::uint32_t w : b) shared |= (u == w);
        if (shared) continue;
        if (!box[f].intersects(box[g])) continue;
        if (triangles_intersect(m.vertices[a[0]], m.vertices[a[1]], m.vertices[a[2]], m.vertices[b[0]],
                                m.vertices[b[1]], m.vertices[b[2]])) {
          flag[f] = 1;
          break;
        }
      }
    }
  }
  return flag;
}

VertexClasses classify_vertices(const PolyMesh& m) {
  const std::size_t V = m.vertices.size();
  VertexClasses c;
  c.free.assign(V, 0);
  c.boundary.assign(V, 0);
  c.manifold.assign(V, 0);
  std::unordered_map<Edge, int> edge_count;
  for (const auto& f : m.faces)
    for (int k = 0; k < 3; ++k) ++edge_count[edge_key(f[k], f[(k + 1) % 3])];
  auto inc = incidence(m);
  for (std::uint32_t v = 0; v < V; ++v) {
    if (inc[v].empty()) {
      c.free[v] = 1;
      continue;
    }
    for (std::uint32_t f : inc[v])
      for (std::uint32_t u : m.faces[f])
        if (u != v && edge_count[edge_key(u, v)] == 1) c.boundary[v] = 1;
    c.manifold[v] = vertex_manifold(v, m, inc[v]) ? 1 : 0;
  }
  return c;
}

double min_angle_deg(const Vec3d& a, const Vec3d& b, const Vec3d& c) {
  const Vec3d* P[3] = {&a, &b, &c};
  if ((b - a).cross(c - a).norm() == 0) return 0;
  double best = 180;
  for (int k = 0; k < 3; ++k) {
    Vec3d u = *P[(k + 1) % 3] - *P[k], w = *P[(k + 2) % 3] - *P[k];
    best = std::min(best, rad2deg(std::atan2(u.cross(w).norm(), u.dot(w))));
  }
  return best;
}

std::vector<double> vertex_mean_curvature(const PolyMesh& m, const VertexClasses& classes) {
  const std::size_t V = m.vertices.size();
  std::vector<double> H(V, std::numeric_limits<double>::quiet_NaN());
  auto inc = incidence(m);
  auto cot = [](const Vec3d& u, const Vec3d& w) { return u.dot(w) / u.cross(w).norm(); };
  for (std::uint32_t v = 0; v < V; ++v) {
    if (classes.free[v] || classes.boundary[v] || !classes.manifold[v]) continue;
    Vec3d lap = Vec3d::Zero();
    double area = 0;
    bool ok = true;
    const Vec3d& x = m.vertices[v];
    for (std::uint32_t f : inc[v]) {
      const auto& t = m.faces[f];
      int k = t[0] == v ? 0 : (t[1] == v ? 1 : 2);
      const Vec3d& a = m.vertices[t[(k + 1) % 3]];
      const Vec3d& b = m.vertices[t[(k + 2) % 3]];
      double A = 0.5 * (a - x).cross(b - x).norm();
      if (!(A > 0)) {
        ok = false;
        break;
      }
      double cot_a = cot(x - a, b - a);  // angle at a, opposite edge x-b
      double cot_b = cot(x - b, a - b);  // angle at b, opposite edge x-a
      lap += cot_b * (x - a) + cot_a * (x - b);
      bool obtuse_x = (a - x).dot(b - x) < 0;
      bool obtuse_other = (x - a).dot(b - a) < 0 || (x - b).dot(a - b) < 0;
      if (obtuse_x)
        area += A / 2;
      else if (obtuse_other)
        area += A / 4;
      else
        area += ((b - x).squaredNorm() * cot_a + (a - x).squaredNorm() * cot_b) / 8;
    }
    if (ok && area > 0) H[v] = lap.norm() / (4 * area);
  }
  return H;
}

MeshQualityReport mesh_quality(const PolyMesh& input) {
  PolyMesh m = merge_coincident_vertices(input);
  MeshQualityReport r;
  r.vertices = m.vertices.size();
  r.triangles = m.faces.size();
  if (m.vertices.empty()) return r;
  VertexClasses c = classify_vertices(m);
  std::size_t nfree = 0, nbdry = 0, nman = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    nfree += c.free[v];
    nbdry += c.boundary[v];
    nman += c.manifold[v];
  }
  const double V = double(m.vertices.size());
  r.free_pct = 100.0 * nfree / V;
  r.boundary_pct = 100.0 * nbdry / V;
  r.manifold_pct = nfree < m.vertices.size() ? 100.0 * nman / (V - nfree) : 100.0;
  if (!m.faces.empty()) {
    auto flags = self_intersecting_faces(m);
    std::size_t ni = 0;
    double angle = 0;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      ni += flags[f];
      const auto& t = m.faces[f];
      angle += min_angle_deg(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    }
    r.self_intersect_pct = 100.0 * ni / double(m.faces.size());
    r.avg_min_angle = angle / double(m.faces.size());
  }
  auto H = vertex_mean_curvature(m, c);
  double sum = 0;
  std::size_t cnt = 0;
  for (double h : H)
    if (!std::isnan(h)) {
      sum += h;
      ++cnt;
    }
  r.mean_curvature = cnt ? 100.0 * sum / cnt : 0.0;
  return r;
}

ReconEvalReport accuracy_completeness(const std::vector<Vec3d>& recon, const std::vector<Vec3d>& gt,
                                      const SurfaceDistance& gt_distance, double tau,
                                      const std::vector<double>& sweep) {
  ReconEvalReport rep;
  rep.tau = tau;
  double tau_max = tau;
  for (double t : sweep) tau_max = std::max(tau_max, t);

  std::vector<double> acc_d(recon.size());
  const std::int64_t nr = static_cast<std::int64_t>(recon.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < nr; ++i) acc_d[i] = std::abs(gt_distance(recon[i]));

  std::vector<double> comp_d(gt.size(), std::numeric_limits<double>::infinity());
  if (!recon.empty()) {
    CompressedOctree tree;
    for (SurfelId i = 0; i < recon.size(); ++i) tree.insert(i, recon[i]);
    std::vector<OctreeHit> hits;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      tree.radius_search(gt[g], tau_max, hits);
      for (const OctreeHit& h : hits) comp_d[g] = std::min(comp_d[g], h.distance);
    }
  }
  auto eval = [&](double t) {
    ReconEvalPoint p;
    p.tau = t;
    if (recon.empty()) {
      p.accuracy_pct = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::size_t n = 0;
      for (double d : acc_d) n += d < t ? 1 : 0;
      p.accuracy_pct = 100.0 * n / double(recon.size());
    }
    if (!gt.empty()) {
      std::size_t n = 0;
      for (double d : comp_d) n += d < t ? 1 : 0;
      p.completeness_pct = 100.0 * n / double(gt.size());
    }
    return p;
  };
  ReconEvalPoint main = eval(tau);
  rep.accuracy_pct = main.accuracy_pct;
  rep.completeness_pct = main.completeness_pct;
  std::vector<double> taus = sweep;
  std::sort(taus.begin(), taus.end());
  for (double t : taus) rep.curve.push_back(eval(t));
  return rep;
}

}  // namespace sm
