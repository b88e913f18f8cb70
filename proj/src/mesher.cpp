#include "surfelmesh/mesher.hpp"

#include <algorithm>
#include <cmath>

namespace sm {

SurfelSnapshot make_snapshot(SurfelCloud& cloud, std::int64_t frame, bool clear_tracking) {
  SurfelSnapshot s;
  const std::size_t cap = cloud.capacity();
  s.p.resize(cap);
  s.n.resize(cap);
  s.r.resize(cap);
  s.t.resize(cap);
  s.live.resize(cap);
  s.generation.resize(cap);
  for (SurfelId i = 0; i < cap; ++i) {
    s.live[i] = cloud.live(i) ? 1 : 0;
    s.generation[i] = cloud.generation(i);
    if (!s.live[i]) continue;
    const Surfel& x = cloud[i];
    s.p[i] = x.p_bar;
    s.n[i] = x.n;
    s.r[i] = x.r;
    s.t[i] = x.t;
  }
  s.moved = cloud.moved_since_mesh();
  s.replaced = cloud.replaced_since_mesh();
  s.created = cloud.created_since_mesh();
  s.removed = cloud.removed_since_mesh();
  s.frame = frame;
  if (clear_tracking) cloud.clear_change_tracking();
  return s;
}

void sync_octree(const SurfelSnapshot& snap, CompressedOctree& tree) {
  for (SurfelId id : snap.removed)
    if (tree.contains(id)) tree.remove(id);
  auto update = [&](SurfelId id) {
    if (!snap.is_live(id)) return;
    if (tree.contains(id))
      tree.notify_moved(id, snap.p[id]);
    else
      tree.insert(id, snap.p[id]);
  };
  for (SurfelId id : snap.replaced) update(id);
  for (SurfelId id : snap.moved) update(id);
  for (SurfelId id : snap.created) update(id);
}

void rebuild_octree(const SurfelSnapshot& snap, CompressedOctree& tree) {
  tree.clear();
  for (SurfelId id = 0; id < snap.capacity(); ++id)
    if (snap.live[id]) tree.insert(id, snap.p[id]);
}

MeshingQueue build_queue(const SurfelSnapshot& snap, const TriangleMesh& mesh,
                         const std::set<SurfelId>& scheduled) {
  MeshingQueue q;
  for (SurfelId id : snap.created)
    if (snap.is_live(id)) q.pending.insert(id);
  for (SurfelId id : snap.replaced)
    if (snap.is_live(id)) q.pending.insert(id);
  for (SurfelId id : snap.moved)
    if (snap.is_live(id) && mesh.state(id) != TriState::kCompleted) q.pending.insert(id);
  for (SurfelId id : scheduled)
    if (snap.is_live(id)) q.pending.insert(id);
  return q;
}

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kAngleEps = 1e-9;
constexpr double kSegEps = 1e-12;

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

struct TangentFrame {
  Vec3d o, u, v;
  double scale = 1;

  TangentFrame(const Vec3d& origin, const Vec3d& normal, double r) : o(origin), scale(r > 0 ? r : 1) {
    u = normal.unitOrthogonal();
    v = normal.cross(u);
  }
  Vec2d to2(const Vec3d& p) const {
    Vec3d d = p - o;
    return Vec2d(d.dot(u), d.dot(v)) / scale;
  }
  double angle(const Vec3d& p) const {
    Vec2d q = to2(p);
    return wrap(std::atan2(q.y(), q.x()));
  }
};

struct Arc {
  double start, len;
  SurfelId a, b;
};

std::vector<Arc> covered_arcs(SurfelId v, const SurfelSnapshot& snap, const TriangleMesh& mesh,
                              const TangentFrame& F) {
  std::vector<Arc> arcs;
  for (TriId t : mesh.incident(v)) {
    auto [a, b] = opposite_edge(mesh.triangle(t), v);
    double ta = F.angle(snap.p[a]), tb = F.angle(snap.p[b]);
    arcs.push_back(Arc{ta, wrap(tb - ta), a, b});
  }
  return arcs;
}

bool strictly_inside(double x, double start, double len) {
  double d = wrap(x - start);
  return d > kAngleEps && d < len - kAngleEps;
}

bool overlaps(const std::vector<Arc>& arcs, double start, double len) {
  for (const Arc& a : arcs) {
    if (strictly_inside(start, a.start, a.len) || strictly_inside(a.start, start, len)) return true;
    double d = wrap(start - a.start);
    if ((d < kAngleEps || d > kTwoPi - kAngleEps) && len > kAngleEps && a.len > kAngleEps) return true;
  }
  return false;
}

struct Region {
  SurfelId L, R;
  double start, len;
};

// Complement of the union of covered arcs, with the vertices bounding each
// uncovered region.
std::vector<Region> uncovered_regions(std::vector<Arc> arcs) {
  std::vector<Region> out;
  if (arcs.empty()) return out;
  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) {
    if (x.start != y.start) return x.start < y.start;
    return x.len > y.len;
  });
  struct Span {
    double s, e;
    SurfelId sv, ev;
  };
  std::vector<Span> m;
  Span cur{arcs[0].start, arcs[0].start + arcs[0].len, arcs[0].a, arcs[0].b};
  for (std::size_t i = 1; i < arcs.size(); ++i) {
    const Arc& a = arcs[i];
    if (a.start <= cur.e + kAngleEps) {
      if (a.start + a.len > cur.e) {
        cur.e = a.start + a.len;
        cur.ev = a.b;
      }
    } else {
      m.push_back(cur);
      cur = Span{a.start, a.start + a.len, a.a, a.b};
    }
  }
  m.push_back(cur);
  // Spans running past 2*pi may swallow spans at the start of the circle.
  while (m.size() > 1 && m.back().e + kAngleEps >= m.front().s + kTwoPi) {
    Span last = m.back();
    m.pop_back();
    Span& first = m.front();
    double wrapped_end = last.e - kTwoPi;
    first.s = last.s - kTwoPi;
    first.sv = last.sv;
    if (wrapped_end > first.e) {
      first.e = wrapped_end;
      first.ev = last.ev;
    }
  }
  if (m.size() == 1 && m[0].e - m[0].s >= kTwoPi - kAngleEps) return out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Span& a = m[i];
    double next_s = (i + 1 < m.size()) ? m[i + 1].s : m[0].s + kTwoPi;
    SurfelId next_v = (i + 1 < m.size()) ? m[i + 1].sv : m[0].sv;
    double len = next_s - a.e;
    if (len > kAngleEps) out.push_back(Region{a.ev, next_v, wrap(a.e), len});
  }
  return out;
}

double orient2(const Vec2d& a, const Vec2d& b, const Vec2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool proper_intersect(const Vec2d& a, const Vec2d& b, const Vec2d& c, const Vec2d& d) {
  double o1 = orient2(a, b, c), o2 = orient2(a, b, d);
  double o3 = orient2(c, d, a), o4 = orient2(c, d, b);
  bool s1 = (o1 > kSegEps && o2 < -kSegEps) || (o1 < -kSegEps && o2 > kSegEps);
  bool s2 = (o3 > kSegEps && o4 < -kSegEps) || (o3 < -kSegEps && o4 > kSegEps);
  return s1 && s2;
}

struct Candidate {
  SurfelId id;
  Vec2d q;
  double angle;
  double dist;
  bool visible = true;
};

class Triangulator {
 public:
  Triangulator(SurfelId s, const SurfelSnapshot& snap, TriangleMesh& mesh, const MeshingConfig& cfg)
      : s_(s), snap_(snap), mesh_(mesh), cfg_(cfg), F_(snap.p[s], snap.n[s], snap.r[s]) {}

  TriangulateOutcome run(CompressedOctree& tree) {
    TriangulateOutcome out;
    if (mesh_.state(s_) == TriState::kCompleted) return out;
    const double rs = snap_.r[s_];
    double radius = rs;
    if (mesh_.state(s_) == TriState::kFront) {
      double maxd = 0;
      for (TriId t : mesh_.incident(s_)) {
        for (SurfelId x : mesh_.triangle(t).v) {
          if (x == s_ || mesh_.edge_triangle_count(s_, x) != 1) continue;
          maxd = std::max(maxd, (snap_.p[x] - snap_.p[s_]).norm());
        }
      }
      if (maxd > cfg_.boundary_extend_factor * rs) {
        out.result = TriangulateResult::kAborted;
        return out;
      }
      radius = std::max(radius, maxd);
    }
    gather(tree, radius);
    compute_visibility();

    int added = 0;
    if (mesh_.state(s_) == TriState::kFree) {
      if (!seed_initial_triangle()) {
        out.result = TriangulateResult::kAborted;
        return out;
      }
      ++added;
    }
    added += fill_fan();
    out.result = TriangulateResult::kDone;
    out.triangles_added = added;
    return out;
  }

 private:
  void gather(CompressedOctree& tree, double radius) {
    const double cos_max = std::cos(deg2rad(cfg_.normal_compat_angle));
    tree.radius_search(snap_.p[s_], radius, hits_);
    std::sort(hits_.begin(), hits_.end(), [](const OctreeHit& a, const OctreeHit& b) { return a.id < b.id; });
    for (const OctreeHit& h : hits_) {
      SurfelId c = h.id;
      if (c == s_ || !snap_.is_live(c)) continue;
      if (snap_.n[c].dot(snap_.n[s_]) < cos_max) continue;
      Vec2d q = F_.to2(snap_.p[c]);
      if (q.norm() < 1e-9) continue;
      bool boundary_nbr = mesh_.edge_triangle_count(s_, c) == 1;
      if (mesh_.state(c) == TriState::kCompleted && !boundary_nbr) continue;
      cand_.push_back(Candidate{c, q, wrap(std::atan2(q.y(), q.x())), h.distance});
    }
  }

  int index_of(SurfelId id) const {
    for (std::size_t i = 0; i < cand_.size(); ++i)
      if (cand_[i].id == id) return static_cast<int>(i);
    return -1;
  }

  void compute_visibility() {
    // Existing edges among the candidates, in s's tangent plane.
    for (const Candidate& c : cand_) {
      for (TriId t : mesh_.incident(c.id)) {
        const auto& v = mesh_.triangle(t).v;
        for (int k = 0; k < 3; ++k) {
          SurfelId a = v[k], b = v[(k + 1) % 3];
          if (a != c.id) continue;
          if (index_of(b) < 0) continue;
          edges_.emplace_back(std::min(a, b), std::max(a, b));
        }
        for (int k = 0; k < 3; ++k) {
          SurfelId a = v[(k + 1) % 3], b = v[k];
          if (a != c.id) continue;
          if (index_of(b) < 0) continue;
          edges_.emplace_back(std::min(a, b), std::max(a, b));
        }
      }
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (auto& e : edges_) edge2_.emplace_back(cand_[index_of(e.first)].q, cand_[index_of(e.second)].q);

    const Vec2d origin(0, 0);
    for (Candidate& c : cand_) {
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edges_[e].first == c.id || edges_[e].second == c.id) continue;
        if (proper_intersect(origin, c.q, edge2_[e].first, edge2_[e].second)) {
          c.visible = false;
          break;
        }
      }
      if (!c.visible) continue;
      // A front neighbor can only connect to s through one of its open wedges.
      if (mesh_.state(c.id) != TriState::kFree && mesh_.edge_triangle_count(s_, c.id) == 0) {
        TangentFrame Fc(snap_.p[c.id], snap_.n[c.id], snap_.r[c.id]);
        auto regions = uncovered_regions(covered_arcs(c.id, snap_, mesh_, Fc));
        double th = Fc.angle(snap_.p[s_]);
        bool open = false;
        for (const Region& r : regions)
          if (strictly_inside(th, r.start, r.len)) open = true;
        c.visible = open;
      }
    }
  }

  bool segment_clear(int i, int j) const {
    SurfelId a = cand_[i].id, b = cand_[j].id;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      if (ed.first == a || ed.second == a || ed.first == b || ed.second == b) continue;
      if (proper_intersect(cand_[i].q, cand_[j].q, edge2_[e].first, edge2_[e].second)) return false;
    }
    return true;
  }

  // Tests whether a counterclockwise triangle (a, b, c) can be added without
  // duplicating, flipping, or overlapping existing triangles at its corners.
  bool try_add(SurfelId a, SurfelId b, SurfelId c) {
    if (mesh_.find(a, b, c)) return false;
    if (mesh_.has_directed_edge(a, b) || mesh_.has_directed_edge(b, c) || mesh_.has_directed_edge(c, a))
      return false;
    if (mesh_.edge_triangle_count(a, b) >= 2 || mesh_.edge_triangle_count(b, c) >= 2 ||
        mesh_.edge_triangle_count(c, a) >= 2)
      return false;
    const Vec3d &pa = snap_.p[a], &pb = snap_.p[b], &pc = snap_.p[c];
    if ((pb - pc).norm() > cfg_.boundary_extend_factor * snap_.r[s_]) return false;
    Vec3d N = (pb - pa).cross(pc - pa);
    if (!(N.norm() > 1e-300)) return false;
    for (SurfelId v : {a, b, c})
      if (!(N.dot(snap_.n[v]) > 0)) return false;
    const SurfelId tri[3] = {a, b, c};
    for (int k = 0; k < 3; ++k) {
      SurfelId v = tri[k], x = tri[(k + 1) % 3], y = tri[(k + 2) % 3];
      if (mesh_.incident(v).empty()) continue;
      TangentFrame Fv(snap_.p[v], snap_.n[v], snap_.r[v]);
      double tx = Fv.angle(snap_.p[x]), ty = Fv.angle(snap_.p[y]);
      double len = wrap(ty - tx);
      if (len >= M_PI) return false;
      if (overlaps(covered_arcs(v, snap_, mesh_, Fv), tx, len)) return false;
    }
    mesh_.add(a, b, c);
    return true;
  }

  bool seed_initial_triangle() {
    std::vector<int> vis;
    for (std::size_t i = 0; i < cand_.size(); ++i)
      if (cand_[i].visible) vis.push_back(static_cast<int>(i));
    if (vis.size() < 2) return false;
    std::sort(vis.begin(), vis.end(), [&](int x, int y) {
      if (cand_[x].dist != cand_[y].dist) return cand_[x].dist < cand_[y].dist;
      return cand_[x].id < cand_[y].id;
    });
    const double narrow = deg2rad(cfg_.narrow_angle), gap = deg2rad(cfg_.gap_angle);
    const Vec2d origin(0, 0);
    for (std::size_t ii = 0; ii < vis.size(); ++ii) {
      for (std::size_t jj = ii + 1; jj < vis.size(); ++jj) {
        int i = vis[ii], j = vis[jj];
        double d = wrap(cand_[j].angle - cand_[i].angle);
        if (d > M_PI) d = kTwoPi - d;
        if (!(d > narrow && d < gap)) continue;
        if (!segment_clear(i, j)) continue;
        bool ccw = orient2(origin, cand_[i].q, cand_[j].q) > 0;
        int a = ccw ? i : j, b = ccw ? j : i;
        bool empty = true;
        for (int k : vis) {
          if (k == i || k == j) continue;
          const Vec2d& p = cand_[k].q;
          if (orient2(origin, cand_[a].q, p) > 0 && orient2(cand_[a].q, cand_[b].q, p) > 0 &&
              orient2(cand_[b].q, origin, p) > 0) {
            empty = false;
            break;
          }
        }
        if (!empty) continue;
        if (try_add(s_, cand_[a].id, cand_[b].id)) return true;
      }
    }
    return false;
  }

  int fill_fan() {
    int added = 0;
    const double narrow = deg2rad(cfg_.narrow_angle), gap = deg2rad(cfg_.gap_angle);
    auto regions = uncovered_regions(covered_arcs(s_, snap_, mesh_, F_));
    for (const Region& reg : regions) {
      struct Slot {
        SurfelId id;
        double rel;  // angle relative to the region start
        double dist;
        bool fixed;  // region end points are never dropped
      };
      std::vector<Slot> seq;
      int li = index_of(reg.L), ri = index_of(reg.R);
      if (li >= 0) seq.push_back(Slot{reg.L, 0.0, cand_[li].q.norm(), true});
      std::vector<Slot> mid;
      for (const Candidate& c : cand_) {
        if (!c.visible || c.id == reg.L || c.id == reg.R) continue;
        double rel = wrap(c.angle - reg.start);
        if (rel > kAngleEps && rel < reg.len - kAngleEps) mid.push_back(Slot{c.id, rel, c.q.norm(), false});
      }
      std::sort(mid.begin(), mid.end(), [](const Slot& x, const Slot& y) {
        if (x.rel != y.rel) return x.rel < y.rel;
        return x.id < y.id;
      });
      seq.insert(seq.end(), mid.begin(), mid.end());
      if (ri >= 0 && reg.R != reg.L) seq.push_back(Slot{reg.R, reg.len, cand_[ri].q.norm(), true});
      if (seq.size() < 2) continue;

      // Drop neighbors forming narrow spaces unless that opens a gap.
      std::vector<std::uint8_t> keep_narrow(seq.size(), 0);
      while (true) {
        int best = -1;
        double best_d = narrow;
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
          double d = seq[i + 1].rel - seq[i].rel;
          if (d < best_d && !keep_narrow[i]) {
            best_d = d;
            best = static_cast<int>(i);
          }
        }
        if (best < 0) break;
        int options[2] = {best, best + 1};
        if (seq[best].dist < seq[best + 1].dist) std::swap(options[0], options[1]);
        bool removed = false;
        for (int k : options) {
          if (seq[k].fixed) continue;
          double lo = k > 0 ? seq[k - 1].rel : seq[k].rel;
          double hi = k + 1 < static_cast<int>(seq.size()) ? seq[k + 1].rel : seq[k].rel;
          bool at_end = k == 0 || k + 1 == static_cast<int>(seq.size());
          // Refuse only if the removal creates a gap; widening an existing one is fine.
          bool creates_gap = hi - lo >= gap && seq[k].rel - lo < gap && hi - seq[k].rel < gap;
          if (!at_end && creates_gap) continue;
          seq.erase(seq.begin() + k);
          keep_narrow.erase(keep_narrow.begin() + std::min<int>(k, static_cast<int>(keep_narrow.size()) - 1));
          removed = true;
          break;
        }
        if (!removed) keep_narrow[best] = 1;
        if (seq.size() < 2) break;
      }

      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        SurfelId a = seq[i].id, b = seq[i + 1].id;
        double d = seq[i + 1].rel - seq[i].rel;
        if (d >= gap) {
          bool closes_hole = d < M_PI && mesh_.edge_triangle_count(a, b) == 1;
          if (!closes_hole) continue;
        }
        if (should_skip_space(a, b)) continue;
        if (try_add(s_, a, b)) ++added;
      }
    }
    return added;
  }

  bool should_skip_space(SurfelId a, SurfelId b) const {
    int ia = index_of(a), ib = index_of(b);
    if (ia < 0 || ib < 0) return true;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      if (ed.first == a || ed.second == a || ed.first == b || ed.second == b) continue;
      if (proper_intersect(cand_[ia].q, cand_[ib].q, edge2_[e].first, edge2_[e].second)) return true;
    }
    return false;
  }

  SurfelId s_;
  const SurfelSnapshot& snap_;
  TriangleMesh& mesh_;
  const MeshingConfig& cfg_;
  TangentFrame F_;
  std::vector<OctreeHit> hits_;
  std::vector<Candidate> cand_;
  std::vector<std::pair<SurfelId, SurfelId>> edges_;
  std::vector<std::pair<Vec2d, Vec2d>> edge2_;
};

}  // namespace

TriangulateOutcome triangulate_surfel(SurfelId s, const SurfelSnapshot& snap, CompressedOctree& tree,
                                      TriangleMesh& mesh, const MeshingConfig& config) {
  if (!snap.is_live(s)) return {};
  Triangulator t(s, snap, mesh, config);
  return t.run(tree);
}

MeshingStats run_meshing_iteration(const MeshingQueue& queue, const SurfelSnapshot& snap,
                                   CompressedOctree& tree, TriangleMesh& mesh,
                                   const MeshingConfig& config) {
  MeshingStats stats;
  for (SurfelId s : queue.pending) {
    if (!snap.is_live(s)) continue;
    TriangulateOutcome o = triangulate_surfel(s, snap, tree, mesh, config);
    if (o.result == TriangulateResult::kSkipped) continue;
    ++stats.processed;
    if (o.result == TriangulateResult::kAborted) {
      ++stats.aborted;
      stats.aborted_ids.push_back(s);
    }
    stats.triangles_added += o.triangles_added;
  }
  return stats;
}

MeshingStats mesh_from_scratch(const SurfelSnapshot& snap, CompressedOctree& tree, TriangleMesh& mesh,
                               const MeshingConfig& config) {
  mesh.clear();
  rebuild_octree(snap, tree);
  MeshingQueue q;
  for (SurfelId id = 0; id < snap.capacity(); ++id)
    if (snap.live[id]) q.pending.insert(id);
  MeshingStats stats = run_meshing_iteration(q, snap, tree, mesh, config);
  // One more sweep over surfels left unfinished; fans of surfels processed
  // later often make room for them.
  MeshingQueue again;
  for (SurfelId id = 0; id < snap.capacity(); ++id)
    if (snap.live[id] && mesh.state(id) != TriState::kCompleted) again.pending.insert(id);
  MeshingStats second = run_meshing_iteration(again, snap, tree, mesh, config);
  stats.processed += second.processed;
  stats.triangles_added += second.triangles_added;
  stats.aborted = second.aborted;
  stats.aborted_ids = std::move(second.aborted_ids);
  return stats;
}

}  // namespace sm
