#include "surfelmesh/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sm {

bool CameraIntrinsics::valid() const {
  return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
         cy < height && depth_scale > 0;
}

CameraIntrinsics CameraIntrinsics::centered(int width, int height) {
  CameraIntrinsics K;
  K.width = width;
  K.height = height;
  K.fx = K.fy = 525.0 * width / 640.0;
  K.cx = width / 2.0;
  K.cy = height / 2.0;
  return K;
}

bool Pose::valid() const { return std::abs(rotation.norm() - 1.0) <= 1e-6; }

Pose Pose::look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up) {
  // Camera looks along +z, x to the right, y down.
  Vec3d z = (target - eye).normalized();
  Vec3d x = z.cross(up);
  if (x.norm() < 1e-12) x = z.unitOrthogonal();
  x.normalize();
  Vec3d y = z.cross(x);
  Mat3d R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  Pose pose;
  pose.rotation = Quatd(R).normalized();
  pose.translation = eye;
  return pose;
}

Vec3d unproject(int x, int y, double depth, const CameraIntrinsics& K) {
  return Vec3d((x + 0.5 - K.cx) * depth / K.fx, (y + 0.5 - K.cy) * depth / K.fy, depth);
}

std::optional<Subpixel> project(const Vec3d& p, const CameraIntrinsics& K) {
  if (!(p.z() > 0)) return std::nullopt;
  Subpixel s;
  s.u = K.fx * p.x() / p.z() + K.cx - 0.5;
  s.v = K.fy * p.y() / p.z() + K.cy - 0.5;
  s.depth = p.z();
  if (!(s.u >= 0 && s.u < K.width && s.v >= 0 && s.v < K.height)) return std::nullopt;
  return s;
}

SurfelId SurfelCloud::add(const Surfel& s) {
  SurfelId id;
  if (!free_list_.empty()) {
    id = free_list_.back();
    free_list_.pop_back();
    slots_[id] = s;
    live_[id] = 1;
    ++generation_[id];
  } else {
    id = static_cast<SurfelId>(slots_.size());
    slots_.push_back(s);
    live_.push_back(1);
    generation_.push_back(0);
  }
  ++live_count_;
  // A slot freed and refilled between two snapshots looks like a replacement
  // to the meshing side.
  if (removed_.erase(id))
    replaced_.insert(id);
  else
    created_.insert(id);
  return id;
}

void SurfelCloud::remove(SurfelId id) {
  if (!live(id)) throw std::invalid_argument("SurfelCloud::remove: dead surfel");
  live_[id] = 0;
  ++generation_[id];
  --live_count_;
  free_list_.push_back(id);
  moved_.erase(id);
  replaced_.erase(id);
  if (created_.erase(id) == 0) removed_.insert(id);
}

void SurfelCloud::replace(SurfelId id, const Surfel& s) {
  if (!live(id)) throw std::invalid_argument("SurfelCloud::replace: dead surfel");
  slots_[id] = s;
  ++generation_[id];
  moved_.erase(id);
  if (created_.count(id) == 0) replaced_.insert(id);
}

std::vector<SurfelId> SurfelCloud::live_ids() const {
  std::vector<SurfelId> ids;
  ids.reserve(live_count_);
  for (SurfelId i = 0; i < live_.size(); ++i)
    if (live_[i]) ids.push_back(i);
  return ids;
}

void SurfelCloud::clear_change_tracking() {
  moved_.clear();
  replaced_.clear();
  created_.clear();
  removed_.clear();
}

void TriangleMesh::ensure(SurfelId s) {
  if (s >= incidence_.size()) {
    incidence_.resize(s + 1);
    state_.resize(s + 1, TriState::kFree);
  }
}

TriId TriangleMesh::add(SurfelId a, SurfelId b, SurfelId c) {
  if (a == b || b == c || a == c) throw std::invalid_argument("TriangleMesh::add: repeated vertex");
  ensure(std::max({a, b, c}));
  TriId t;
  if (!free_tris_.empty()) {
    t = free_tris_.back();
    free_tris_.pop_back();
    tris_[t] = Triangle{{a, b, c}};
    alive_[t] = 1;
  } else {
    t = static_cast<TriId>(tris_.size());
    tris_.push_back(Triangle{{a, b, c}});
    alive_.push_back(1);
  }
  ++count_;
  for (SurfelId v : {a, b, c}) {
    incidence_[v].push_back(t);
    update_state(v);
  }
  return t;
}

void TriangleMesh::remove(TriId t) {
  if (!alive(t)) return;
  alive_[t] = 0;
  --count_;
  free_tris_.push_back(t);
  for (SurfelId v : tris_[t].v) {
    auto& inc = incidence_[v];
    inc.erase(std::find(inc.begin(), inc.end(), t));
    update_state(v);
  }
}

void TriangleMesh::remove_all_of(SurfelId s) {
  if (s >= incidence_.size()) return;
  while (!incidence_[s].empty()) remove(incidence_[s].back());
}

void TriangleMesh::clear() {
  tris_.clear();
  alive_.clear();
  free_tris_.clear();
  count_ = 0;
  incidence_.clear();
  state_.clear();
}

const std::vector<TriId>& TriangleMesh::incident(SurfelId s) const {
  static const std::vector<TriId> kEmpty;
  return s < incidence_.size() ? incidence_[s] : kEmpty;
}

std::pair<SurfelId, SurfelId> opposite_edge(const Triangle& t, SurfelId s) {
  if (t.v[0] == s) return {t.v[1], t.v[2]};
  if (t.v[1] == s) return {t.v[2], t.v[0]};
  return {t.v[0], t.v[1]};
}

void TriangleMesh::update_state(SurfelId s) {
  const auto& inc = incidence_[s];
  if (inc.empty()) {
    state_[s] = TriState::kFree;
    return;
  }
  // Completed iff every opposite edge a->b is continued by an edge b->c, i.e.
  // the fan closes into cycles.
  bool closed = true;
  for (TriId t : inc) {
    SurfelId b = opposite_edge(tris_[t], s).second;
    bool found = false;
    for (TriId u : inc) {
      if (opposite_edge(tris_[u], s).first == b) {
        found = true;
        break;
      }
    }
    if (!found) {
      closed = false;
      break;
    }
  }
  state_[s] = closed ? TriState::kCompleted : TriState::kFront;
}

std::optional<TriId> TriangleMesh::find(SurfelId a, SurfelId b, SurfelId c) const {
  std::array<SurfelId, 3> key{a, b, c};
  std::sort(key.begin(), key.end());
  for (TriId t : incident(a)) {
    std::array<SurfelId, 3> v = tris_[t].v;
    std::sort(v.begin(), v.end());
    if (v == key) return t;
  }
  return std::nullopt;
}

bool TriangleMesh::has_directed_edge(SurfelId a, SurfelId b) const {
  for (TriId t : incident(a)) {
    const auto& v = tris_[t].v;
    for (int i = 0; i < 3; ++i)
      if (v[i] == a && v[(i + 1) % 3] == b) return true;
  }
  return false;
}

int TriangleMesh::edge_triangle_count(SurfelId a, SurfelId b) const {
  int n = 0;
  for (TriId t : incident(a)) {
    const auto& v = tris_[t].v;
    if (v[0] == b || v[1] == b || v[2] == b) ++n;
  }
  return n;
}

std::vector<Triangle> TriangleMesh::triangles() const {
  std::vector<Triangle> out;
  out.reserve(count_);
  for (TriId t = 0; t < tris_.size(); ++t)
    if (alive_[t]) out.push_back(tris_[t]);
  return out;
}

double angle_between(const Vec3d& a, const Vec3d& b) {
  double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double deg2rad(double deg) { return deg * M_PI / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace sm
