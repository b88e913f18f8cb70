#include "surfelmesh/remesher.hpp"

#include <cmath>

namespace sm {

bool triangle_valid(const Triangle& tri, const SurfelSnapshot& snap, const RemeshConfig& config) {
  const double cos_max = std::cos(deg2rad(config.normal_compat_angle));
  const Vec3d& a = snap.p[tri.v[0]];
  const Vec3d& b = snap.p[tri.v[1]];
  const Vec3d& c = snap.p[tri.v[2]];
  const Vec3d N = (b - a).cross(c - a);
  for (int k = 0; k < 3; ++k) {
    SurfelId s = tri.v[k];
    const double limit = config.stretch_factor * config.search_extend_factor * snap.r[s];
    bool ok = N.dot(snap.n[s]) >= 0;
    for (int j = 1; j < 3 && ok; ++j) {
      SurfelId o = tri.v[(k + j) % 3];
      if ((snap.p[o] - snap.p[s]).norm() > limit) ok = false;
      if (snap.n[o].dot(snap.n[s]) < cos_max) ok = false;
    }
    if (ok) return true;
  }
  return false;
}

RemeshResult remesh_pass(const SurfelSnapshot& snap, CompressedOctree& tree, TriangleMesh& mesh,
                         const RemeshConfig& config) {
  RemeshResult res;
  res.stats.triangles_before = mesh.triangle_count();
  std::vector<OctreeHit> hits;

  auto delete_all_of = [&](SurfelId s) {
    for (TriId t : mesh.incident(s))
      for (SurfelId v : mesh.triangle(t).v) res.scheduled.insert(v);
    res.stats.deleted += mesh.incident(s).size();
    mesh.remove_all_of(s);
  };

  // Slots whose occupant is gone lose their triangles outright.
  for (SurfelId id : snap.removed) delete_all_of(id);
  for (SurfelId id : snap.replaced) delete_all_of(id);

  // (i) test triangles of moved surfels.
  std::set<TriId> candidates;
  for (SurfelId id : snap.moved)
    for (TriId t : mesh.incident(id)) candidates.insert(t);
  std::set<SurfelId> invalid_corners;
  for (TriId t : candidates) {
    if (!mesh.alive(t)) continue;
    ++res.stats.tested;
    const Triangle tri = mesh.triangle(t);
    if (triangle_valid(tri, snap, config)) continue;
    ++res.stats.invalid;
    ++res.stats.deleted;
    mesh.remove(t);
    for (SurfelId v : tri.v) {
      invalid_corners.insert(v);
      res.scheduled.insert(v);
    }
  }
  // (ii) neighborhoods of deleted triangles' corners.
  for (SurfelId v : invalid_corners) {
    if (!snap.is_live(v)) continue;
    tree.radius_search(snap.p[v], snap.r[v], hits);
    for (const OctreeHit& h : hits) {
      delete_all_of(h.id);
      res.scheduled.insert(h.id);
    }
  }
  // (iii) neighborhoods of new surfels.
  auto around_new = [&](SurfelId u) {
    if (!snap.is_live(u)) return;
    res.scheduled.insert(u);
    tree.radius_search(snap.p[u], snap.r[u], hits);
    for (const OctreeHit& h : hits) {
      delete_all_of(h.id);
      res.scheduled.insert(h.id);
    }
  };
  for (SurfelId u : snap.created) around_new(u);
  for (SurfelId u : snap.replaced) around_new(u);

  for (auto it = res.scheduled.begin(); it != res.scheduled.end();) {
    if (snap.is_live(*it))
      ++it;
    else
      it = res.scheduled.erase(it);
  }
  return res;
}

void defer_inactive(SurfelSnapshot& snap, std::int64_t active_window, DeferredMoves& deferred) {
  if (active_window < 0) return;
  for (auto it = snap.moved.begin(); it != snap.moved.end();) {
    SurfelId id = *it;
    if (snap.is_live(id) && snap.frame - snap.t[id] > active_window) {
      deferred.parked.insert(id);
      it = snap.moved.erase(it);
    } else {
      ++it;
    }
  }
}

void reactivate_deferred(DeferredMoves& deferred, const AssociationResult& assoc, SurfelCloud& cloud) {
  for (auto it = deferred.parked.begin(); it != deferred.parked.end();) {
    SurfelId id = *it;
    if (!cloud.live(id)) {
      it = deferred.parked.erase(it);
      continue;
    }
    AssocClass c = assoc.cls(id);
    if (c == AssocClass::kSupported || c == AssocClass::kConflicting) {
      cloud.mark_moved(id);
      it = deferred.parked.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace sm
